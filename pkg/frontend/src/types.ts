// Shapes of the hub's HTTP API payloads.

export type YesNo = "YES" | "NO";

export type ActuatorName = "led" | "camera" | "white_noise";

export type AlertType =
  | "temp_high"
  | "temp_low"
  | "crying"
  | "movement"
  | "motion_room"
  | "wet_mattress"
  | "rfid_trespass";

export type CommandName =
  | "led_on"
  | "led_off"
  | "camera_on"
  | "camera_off"
  | "white_noise_on"
  | "white_noise_off";

export interface Counters {
  crying: number;
  movement: number;
  date: string | null;
}

export interface LocationFix {
  lat: number;
  lon: number;
  ts: number;
}

/** GET /state payload (extra hub bookkeeping fields are ignored). */
export interface HubState {
  motion: YesNo;
  sound: YesNo;
  temp_c: number | null;
  moisture_pct: number | null;
  counters: Counters;
  actuators: Record<ActuatorName, boolean>;
  outside_home: boolean;
  location: LocationFix | null;
}

/** One `data:` payload from GET /stream. */
export interface Alert {
  type: AlertType;
  ts: number;
  detail: Record<string, unknown>;
}
