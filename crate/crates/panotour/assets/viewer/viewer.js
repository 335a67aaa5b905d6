"use strict";

const GLYPH = { picture: "\u{1F5BC}", video: "▶", text: "i", link: "→" };
const FOV_MIN = 30, FOV_MAX = 110;
const W = 960, H = 720;

const state = { tour: null, scene: null, yaw: 0, pitch: 0, fov: 90, pending: 0 };
const $ = (id) => document.getElementById(id);
const rad = (d) => d * Math.PI / 180;

function wrapDeg(d) {
  const w = ((d + 180) % 360 + 360) % 360 - 180;
  return w;
}

function clampView() {
  state.yaw = wrapDeg(state.yaw);
  state.pitch = Math.max(-90, Math.min(90, state.pitch));
  state.fov = Math.max(FOV_MIN, Math.min(FOV_MAX, state.fov));
}

// Screen position of a direction under the current view, or null when behind the camera.
function project(yawDeg, pitchDeg) {
  const l = rad(yawDeg), p = rad(pitchDeg);
  const v = [Math.cos(p) * Math.cos(l), Math.cos(p) * Math.sin(l), Math.sin(p)];
  const cy = Math.cos(rad(-state.yaw)), sy = Math.sin(rad(-state.yaw));
  const a = [cy * v[0] - sy * v[1], sy * v[0] + cy * v[1], v[2]];
  const cp = Math.cos(rad(-state.pitch)), sp = Math.sin(rad(-state.pitch));
  const c = [cp * a[0] - sp * a[2], a[1], sp * a[0] + cp * a[2]];
  if (c[0] <= 1e-6) return null;
  const t = Math.tan(rad(state.fov) / 2);
  const x = (c[1] / c[0]) / t, y = (c[2] / c[0]) / t;
  return { x: (x + 1) / 2 * W, y: H / 2 - y * W / 2 };
}

function showError(msg, retry) {
  $("error-text").textContent = msg;
  $("error").hidden = false;
  $("retry").onclick = () => { $("error").hidden = true; retry(); };
}

function render() {
  const s = state.scene;
  if (!s) return;
  clampView();
  const q = `yaw_deg=${state.yaw.toFixed(2)}&pitch_deg=${state.pitch.toFixed(2)}&fov_deg=${state.fov.toFixed(2)}&w=${W}&h=${H}`;
  const ticket = ++state.pending;
  const img = new Image();
  img.onload = () => { if (ticket === state.pending) $("frame").src = img.src; };
  img.onerror = () => showError(`Could not render scene ${s.id}.`, render);
  img.src = `/api/scene/${encodeURIComponent(s.id)}/view?${q}`;
  const layer = $("markers");
  layer.replaceChildren();
  for (const h of s.hotspots) {
    const pt = project(h.yaw_deg, h.pitch_deg);
    if (!pt) continue;
    const el = document.createElement("button");
    el.className = "hotspot";
    el.title = h.title;
    el.textContent = GLYPH[h.kind] || "?";
    el.style.left = `${pt.x / W * 100}%`;
    el.style.top = `${pt.y / H * 100}%`;
    el.onclick = (e) => { e.stopPropagation(); activate(h); };
    layer.appendChild(el);
  }
}

function activate(h) {
  const body = $("overlay-body");
  body.replaceChildren();
  if (h.kind === "link") {
    enterScene(h.payload);
    return;
  }
  const heading = document.createElement("h2");
  heading.textContent = h.title;
  body.appendChild(heading);
  if (h.kind === "text") {
    const p = document.createElement("p");
    p.textContent = h.payload;
    body.appendChild(p);
  } else if (h.kind === "picture") {
    const img = document.createElement("img");
    img.onerror = () => { body.appendChild(document.createTextNode("Picture failed to load.")); };
    img.src = `/api/media/${h.payload.split("/").map(encodeURIComponent).join("/")}`;
    body.appendChild(img);
  } else if (h.kind === "video") {
    const frame = document.createElement("iframe");
    frame.width = 640; frame.height = 360;
    frame.allow = "autoplay; fullscreen";
    frame.src = h.payload;
    body.appendChild(frame);
  }
  $("overlay").hidden = false;
}

function enterScene(id) {
  const s = state.tour.scenes.find((x) => x.id === id);
  if (!s) return;
  state.scene = s;
  state.yaw = s.initial_view.yaw_deg;
  state.pitch = s.initial_view.pitch_deg;
  state.fov = s.initial_view.fov_deg;
  for (const b of $("scenes").children) b.classList.toggle("current", b.dataset.id === id);
  render();
}

async function load() {
  try {
    const res = await fetch("/api/tour");
    if (!res.ok) throw new Error(`HTTP ${res.status}`);
    state.tour = await res.json();
  } catch (e) {
    showError(`Could not load the tour: ${e.message}`, load);
    return;
  }
  $("title").textContent = state.tour.title || state.tour.id;
  const nav = $("scenes");
  nav.replaceChildren();
  for (const s of state.tour.scenes) {
    const b = document.createElement("button");
    b.dataset.id = s.id;
    b.title = s.title || s.id;
    const img = document.createElement("img");
    img.alt = s.title || s.id;
    img.src = `/api/scene/${encodeURIComponent(s.id)}/preview`;
    b.appendChild(img);
    b.onclick = () => enterScene(s.id);
    nav.appendChild(b);
  }
  enterScene(state.tour.start_scene);
}

function bindInput() {
  const stage = $("stage");
  let drag = null;
  stage.addEventListener("pointerdown", (e) => { drag = { x: e.clientX, y: e.clientY }; stage.setPointerCapture(e.pointerId); });
  stage.addEventListener("pointerup", () => { drag = null; });
  stage.addEventListener("pointermove", (e) => {
    if (!drag) return;
    const k = state.fov / stage.clientWidth;
    state.yaw -= (e.clientX - drag.x) * k;
    state.pitch += (e.clientY - drag.y) * k;
    drag = { x: e.clientX, y: e.clientY };
    render();
  });
  stage.addEventListener("wheel", (e) => { e.preventDefault(); state.fov += Math.sign(e.deltaY) * 5; render(); }, { passive: false });
  document.addEventListener("keydown", (e) => {
    const step = state.fov / 10;
    const keys = { ArrowLeft: () => state.yaw -= step, ArrowRight: () => state.yaw += step,
      ArrowUp: () => state.pitch += step, ArrowDown: () => state.pitch -= step,
      "+": () => state.fov -= 5, "-": () => state.fov += 5 };
    if (keys[e.key]) { keys[e.key](); render(); }
  });
  $("close").onclick = () => { $("overlay").hidden = true; };
}

bindInput();
load();
