// Shared seed data: a representative /state payload plus ten stream alerts.

import { initialModel, reduce, type ViewModel } from "../src/model.js";
import type { Alert, HubState } from "../src/types.js";

export const STATE: HubState = {
  motion: "YES",
  sound: "NO",
  temp_c: 24.58,
  moisture_pct: 28.9,
  counters: { crying: 3, movement: 1, date: "1970-01-01" },
  actuators: { led: false, camera: false, white_noise: true },
  outside_home: true,
  location: { lat: 3.0468, lon: 101.4522, ts: 5000 },
};

export const TEN_ALERTS: Alert[] = [
  { type: "crying", ts: 1000, detail: { source: "sound" } },
  { type: "movement", ts: 2000, detail: { source: "motion_cot" } },
  { type: "motion_room", ts: 3000, detail: { source: "motion_room" } },
  { type: "temp_high", ts: 4000, detail: { temp_c: 24.58 } },
  { type: "temp_low", ts: 5000, detail: { temp_c: 19.38 } },
  { type: "wet_mattress", ts: 6000, detail: { moisture_pct: 28.9 } },
  { type: "rfid_trespass", ts: 7000, detail: { reader: "door-front", zone: "front-door", location: null } },
  { type: "crying", ts: 68000, detail: { source: "sound" } },
  { type: "wet_mattress", ts: 69000, detail: { moisture_pct: 41.8 } },
  {
    type: "rfid_trespass",
    ts: 70000,
    detail: { reader: "door-front", zone: "front-door", location: { lat: 3.0468, lon: 101.4522, ts: 5000 } },
  },
];

export function seededModel(): ViewModel {
  let model = initialModel();
  model = reduce(model, { kind: "connection", status: "live" });
  model = reduce(model, { kind: "state_loaded", state: STATE });
  for (const alert of TEN_ALERTS) {
    model = reduce(model, { kind: "stream_alert", alert });
  }
  return model;
}
