// Pure HTML-string renderer: render(model) never reads anything but the model.

import type { ViewModel } from "./model.js";
import type { Alert, ActuatorName, CommandName, HubState } from "./types.js";

const ALERT_LABELS: Record<string, string> = {
  temp_high: "Room too hot",
  temp_low: "Room too cold",
  crying: "Baby is crying",
  movement: "Baby is moving",
  motion_room: "Motion in the room",
  wet_mattress: "Mattress is wet",
  rfid_trespass: "Baby passed an exit door",
};

const ACTUATOR_LABELS: Record<ActuatorName, string> = {
  led: "LED light",
  camera: "IP camera",
  white_noise: "White noise",
};

export function escapeHtml(value: unknown): string {
  return String(value)
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

function fmtTime(tsMs: number): string {
  return new Date(tsMs).toISOString().replace("T", " ").replace(".000Z", "Z");
}

function alertDetail(alert: Alert): string {
  const d = alert.detail;
  switch (alert.type) {
    case "temp_high":
    case "temp_low":
      return typeof d.temp_c === "number" ? `${d.temp_c.toFixed(2)} °C` : "";
    case "wet_mattress":
      return typeof d.moisture_pct === "number" ? `${d.moisture_pct.toFixed(1)} %` : "";
    case "rfid_trespass": {
      const zone = d.zone === undefined ? "" : `zone ${escapeHtml(d.zone)}`;
      const loc = d.location as { lat: number; lon: number } | null | undefined;
      const at = loc ? ` · last fix ${loc.lat.toFixed(4)}, ${loc.lon.toFixed(4)}` : "";
      return `${zone}${at}`;
    }
    default:
      return "";
  }
}

function yesNoPanel(label: string, value: "YES" | "NO"): string {
  const cls = value === "YES" ? "panel hot" : "panel";
  return `<div class="${cls}"><h2>${label}</h2><p class="big">${value}</p></div>`;
}

function actuatorButton(state: HubState, name: ActuatorName): string {
  const on = state.actuators[name];
  const next: CommandName = `${name}_${on ? "off" : "on"}` as CommandName;
  return (
    `<button class="actuator ${on ? "on" : "off"}" data-cmd="${next}">` +
    `${ACTUATOR_LABELS[name]}: ${on ? "ON" : "OFF"}</button>`
  );
}

function locationPanel(state: HubState): string {
  if (!state.location) {
    return `<div class="panel"><h2>Location</h2><p>no fix stored</p></div>`;
  }
  const { lat, lon } = state.location;
  const href = `https://www.openstreetmap.org/?mlat=${lat}&amp;mlon=${lon}#map=16/${lat}/${lon}`;
  return (
    `<div class="panel"><h2>Location</h2>` +
    `<p class="coords">${lat.toFixed(5)}, ${lon.toFixed(5)}</p>` +
    `<p><a href="${href}" target="_blank" rel="noreferrer">open map</a></p></div>`
  );
}

function feed(alerts: Alert[]): string {
  if (alerts.length === 0) {
    return `<p class="empty">no notifications yet</p>`;
  }
  const items = alerts
    .map((alert) => {
      const label = ALERT_LABELS[alert.type] ?? escapeHtml(alert.type);
      const detail = alertDetail(alert);
      return (
        `<li class="alert alert-${escapeHtml(alert.type)}">` +
        `<span class="time">${fmtTime(alert.ts)}</span>` +
        `<span class="label">${label}</span>` +
        (detail ? `<span class="detail">${detail}</span>` : "") +
        `</li>`
      );
    })
    .join("");
  return `<ul class="feed">${items}</ul>`;
}

export function render(model: ViewModel): string {
  const badge =
    model.connection === "live"
      ? `<span class="badge live">LIVE</span>`
      : `<span class="badge reconnecting">RECONNECTING…</span>`;
  const toast = model.toast ? `<div class="toast">${escapeHtml(model.toast)}</div>` : "";

  if (!model.state) {
    return `<header><h1>cradlewatch</h1>${badge}</header>${toast}<p class="empty">waiting for hub…</p>`;
  }
  const s = model.state;
  const away = s.outside_home
    ? `<div class="banner away">Baby is outside the home` +
      ` <button data-action="reset-home">baby returned home</button></div>`
    : "";
  return (
    `<header><h1>cradlewatch</h1>${badge}</header>` +
    toast +
    away +
    `<section class="panels">` +
    yesNoPanel("Sound", s.sound) +
    yesNoPanel("Motion", s.motion) +
    `<div class="panel"><h2>Temperature</h2><p class="big">${
      s.temp_c === null ? "–" : `${s.temp_c.toFixed(1)} °C`
    }</p></div>` +
    `<div class="panel"><h2>Moisture</h2><p class="big">${
      s.moisture_pct === null ? "–" : `${s.moisture_pct.toFixed(0)} %`
    }</p></div>` +
    `</section>` +
    `<section class="counters"><h2>Today (${escapeHtml(s.counters.date ?? "–")})</h2>` +
    `<p>crying: <b class="crying-count">${s.counters.crying}</b>` +
    ` · movement: <b class="movement-count">${s.counters.movement}</b></p></section>` +
    `<section class="controls">` +
    actuatorButton(s, "led") +
    actuatorButton(s, "camera") +
    actuatorButton(s, "white_noise") +
    `<div class="camera-view">${
      s.actuators.camera ? "camera stream placeholder (on)" : "camera off"
    }</div>` +
    `</section>` +
    locationPanel(s) +
    `<section class="notifications"><h2>Notifications</h2>${feed(model.alerts)}</section>`
  );
}
