/** Console entry point: wires the websocket client to the controls and
 * canvases. All nontrivial logic lives in the imported pure modules. */

import { ConsoleClient } from "./client.js";
import { contactRaster, faultChart, velocityChart } from "./charts.js";
import { jointColors, sideSegments, topSegments, BODY_HALF_LENGTH } from "./pose.js";
import { drawChart, drawPose, drawRaster } from "./render.js";
import {
  FOOT_NAMES,
  FaultKind,
  JOINT_NAMES,
  makeClearFault,
  makeCommand,
  makeFault,
} from "./schema.js";

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

function canvasCtx(id: string): CanvasRenderingContext2D {
  const ctx = el<HTMLCanvasElement>(id).getContext("2d");
  if (!ctx) throw new Error(`no 2d context for #${id}`);
  return ctx;
}

function setup(): void {
  const status = el<HTMLSpanElement>("status");
  const toast = el<HTMLDivElement>("toast");
  const client = new ConsoleClient({
    onError: (message) => {
      toast.textContent = message;
      toast.classList.add("visible");
      setTimeout(() => toast.classList.remove("visible"), 4000);
    },
  });

  const jointSelect = el<HTMLSelectElement>("fault-joint");
  JOINT_NAMES.forEach((name, i) => {
    const opt = document.createElement("option");
    opt.value = String(i);
    opt.textContent = name;
    jointSelect.appendChild(opt);
  });

  const sliders = ["vx", "vy", "wz"].map((axis) => el<HTMLInputElement>(`slider-${axis}`));
  const sendCommand = () => {
    const [vx, vy, wz] = sliders.map((s) => Number(s.value));
    client.send(makeCommand(vx, vy, wz));
  };
  sliders.forEach((s) => s.addEventListener("change", sendCommand));

  el<HTMLButtonElement>("inject-fault").addEventListener("click", () => {
    const joint = Number(jointSelect.value);
    const kind = el<HTMLSelectElement>("fault-kind").value as FaultKind;
    client.send(makeFault(joint, kind));
  });
  el<HTMLButtonElement>("clear-fault").addEventListener("click", () => {
    client.send(makeClearFault());
  });
  el<HTMLButtonElement>("pause").addEventListener("click", () => {
    const paused = client.state.latest?.paused ?? false;
    client.send({ type: paused ? "resume" : "pause" });
  });
  el<HTMLButtonElement>("reset").addEventListener("click", () => {
    client.send({ type: "reset" });
  });

  const side = canvasCtx("pose-side");
  const top = canvasCtx("pose-top");
  const velCtx = canvasCtx("chart-velocity");
  const faultCtx = canvasCtx("chart-faults");
  const rasterCtx = canvasCtx("chart-contacts");
  const poseViewSide = { xMin: -0.5, xMax: 0.5, yMin: -0.55, yMax: 0.25 };
  const poseViewTop = { xMin: -0.5, xMax: 0.5, yMin: -0.4, yMax: 0.4 };

  const redraw = () => {
    const s = client.state.latest;
    if (!s) return;
    const colors = jointColors(s.f_true, s.f_est);
    drawPose(side, sideSegments(s.q), colors, poseViewSide,
             [-BODY_HALF_LENGTH, 0, BODY_HALF_LENGTH, 0]);
    drawPose(top, topSegments(s.q), colors, poseViewTop,
             [-BODY_HALF_LENGTH, 0, BODY_HALF_LENGTH, 0]);
    drawChart(velCtx, velocityChart(client.state.velocity));
    drawChart(faultCtx, faultChart(client.state.faults, JOINT_NAMES));
    drawRaster(rasterCtx, contactRaster(client.state.contacts, FOOT_NAMES));
    el<HTMLSpanElement>("sim-time").textContent = s.t.toFixed(2);
    el<HTMLSpanElement>("reward").textContent = s.reward.toFixed(4);
  };

  setInterval(() => {
    status.textContent = client.stalled ? "stalled" : client.state.status;
    status.className = client.stalled ? "stalled" : client.state.status;
    redraw();
  }, 40);

  const proto = location.protocol === "https:" ? "wss" : "ws";
  client.connect(`${proto}://${location.host}/ws`);
}

window.addEventListener("DOMContentLoaded", setup);
