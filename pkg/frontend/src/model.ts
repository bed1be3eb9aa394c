// The dashboard's entire UI state as a pure reducer over typed actions.
//
// The view model is a function of (last /state fetch, stream alerts since,
// pending optimistic commands): every input arrives as an action, the reducer
// never touches the network or the clock, and render() is a pure function of
// the model — so the whole pipeline is snapshot-testable.

import type { ActuatorName, Alert, CommandName, HubState } from "./types.js";

export const ALERT_CAP = 200;

export type ConnectionStatus = "live" | "reconnecting";

export interface ViewModel {
  state: HubState | null;
  /** Newest first, in stream order, capped at ALERT_CAP. */
  alerts: Alert[];
  connection: ConnectionStatus;
  /** Actuator values before each in-flight optimistic toggle, for rollback. */
  pending: Partial<Record<ActuatorName, boolean>>;
  toast: string | null;
}

export type Action =
  | { kind: "state_loaded"; state: HubState }
  | { kind: "stream_alert"; alert: Alert }
  | { kind: "connection"; status: ConnectionStatus }
  | { kind: "command_sent"; cmd: CommandName }
  | { kind: "command_accepted"; cmd: CommandName }
  | { kind: "command_failed"; cmd: CommandName; reason?: string }
  | { kind: "home_reset" }
  | { kind: "toast_cleared" };

export const COMMAND_EFFECT: Record<CommandName, { actuator: ActuatorName; value: boolean }> = {
  led_on: { actuator: "led", value: true },
  led_off: { actuator: "led", value: false },
  camera_on: { actuator: "camera", value: true },
  camera_off: { actuator: "camera", value: false },
  white_noise_on: { actuator: "white_noise", value: true },
  white_noise_off: { actuator: "white_noise", value: false },
};

export function initialModel(): ViewModel {
  return { state: null, alerts: [], connection: "reconnecting", pending: {}, toast: null };
}

function withActuator(state: HubState, actuator: ActuatorName, value: boolean): HubState {
  return { ...state, actuators: { ...state.actuators, [actuator]: value } };
}

export function reduce(model: ViewModel, action: Action): ViewModel {
  switch (action.kind) {
    case "state_loaded":
      // A fresh fetch is authoritative; any optimistic guesses are obsolete.
      return { ...model, state: action.state, pending: {} };

    case "stream_alert": {
      const alerts = [action.alert, ...model.alerts];
      if (alerts.length > ALERT_CAP) alerts.length = ALERT_CAP;
      return { ...model, alerts };
    }

    case "connection":
      return { ...model, connection: action.status };

    case "command_sent": {
      if (!model.state) return model;
      const { actuator, value } = COMMAND_EFFECT[action.cmd];
      const previous = model.state.actuators[actuator];
      if (previous === value) return model; // idempotent on the hub too
      return {
        ...model,
        state: withActuator(model.state, actuator, value),
        pending: { ...model.pending, [actuator]: previous },
      };
    }

    case "command_accepted": {
      const { actuator } = COMMAND_EFFECT[action.cmd];
      const pending = { ...model.pending };
      delete pending[actuator];
      return { ...model, pending };
    }

    case "command_failed": {
      const { actuator } = COMMAND_EFFECT[action.cmd];
      const pending = { ...model.pending };
      let state = model.state;
      if (state && actuator in pending) {
        state = withActuator(state, actuator, pending[actuator] as boolean);
      }
      delete pending[actuator];
      const toast = `command ${action.cmd} failed${action.reason ? `: ${action.reason}` : ""}`;
      return { ...model, state, pending, toast };
    }

    case "home_reset":
      if (!model.state) return model;
      return { ...model, state: { ...model.state, outside_home: false } };

    case "toast_cleared":
      return { ...model, toast: null };
  }
}
