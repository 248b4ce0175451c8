/** Entry point: wires the channel, views and therapist controls.
 *
 * One connection feeds both tabs.  Message handling stays off the hot
 * path: envelopes fold into the BoardView immediately, DOM work is
 * batched into at most one render per animation frame, and the cursor
 * keeps only the latest position.
 */

import { BoardView } from "./board.js";
import { Channel, ChannelStatus } from "./connection.js";
import { renderDashboard } from "./dashboard.js";
import { parseEnvelope } from "./protocol.js";
import { render, updateCursor } from "./render.js";

const params = new URLSearchParams(window.location.search);
const debugPointer = params.get("debug_pointer") === "1";

const boardRoot = mustFind("board-root");
const statusNode = mustFind("connection-status");
const controlsRoot = mustFind("controls");
const dashboardTime = mustFind("dashboard-time");
const dashboardGrade = mustFind("dashboard-grade");

const view = new BoardView();
let screenDirty = true;
let cursorDirty = false;
let renderQueued = false;

function mustFind(id: string): HTMLElement {
  const node = document.getElementById(id);
  if (!node) {
    throw new Error(`missing #${id} in index.html`);
  }
  return node;
}

function scheduleRender(): void {
  if (renderQueued) {
    return;
  }
  renderQueued = true;
  requestAnimationFrame(() => {
    renderQueued = false;
    if (screenDirty) {
      render(boardRoot, view);
      screenDirty = false;
      cursorDirty = false;
    } else if (cursorDirty) {
      updateCursor(boardRoot, view);
      cursorDirty = false;
    }
  });
}

function onMessage(raw: string): void {
  const parsed = parseEnvelope(raw);
  if (!parsed.ok) {
    view.banner = parsed.reason;
    screenDirty = true;
    scheduleRender();
    return;
  }
  const before = view.cursorCell;
  const outcome = view.apply(parsed.envelope);
  if (!outcome.applied) {
    if (outcome.reason === "schema") {
      screenDirty = true;
      scheduleRender();
    }
    return;
  }
  if (outcome.kind === "hand_estimate") {
    cursorDirty = true;
    if (view.cursorCell !== before) {
      screenDirty = true;
    }
  } else {
    screenDirty = true;
  }
  scheduleRender();
}

function onStatus(status: ChannelStatus, attempt: number): void {
  statusNode.dataset.status = status;
  statusNode.textContent =
    status === "open"
      ? "connected"
      : status === "connecting"
        ? "connecting..."
        : `disconnected (retry ${attempt})`;
}

const wsUrl = `${window.location.protocol === "https:" ? "wss" : "ws"}://${
  window.location.host
}/ws`;
const channel = new Channel(wsUrl, { onMessage, onStatus });

// -- therapist controls ------------------------------------------------

function button(label: string, onClick: () => void): HTMLButtonElement {
  const node = document.createElement("button");
  node.type = "button";
  node.textContent = label;
  node.addEventListener("click", onClick);
  return node;
}

function select(options: string[]): HTMLSelectElement {
  const node = document.createElement("select");
  for (const value of options) {
    const option = document.createElement("option");
    option.value = value;
    option.textContent = value;
    node.appendChild(option);
  }
  return node;
}

function labelled(text: string, input: HTMLElement): HTMLElement {
  const wrap = document.createElement("label");
  wrap.append(text, input);
  return wrap;
}

function buildControls(): void {
  const playerInput = document.createElement("input");
  playerInput.value = "cg01";
  const groupSelect = select(["CG", "EG"]);
  const methodSelect = select(["Manual", "SG"]);
  const sessionInput = document.createElement("input");
  sessionInput.type = "number";
  sessionInput.min = "1";
  sessionInput.max = "4";
  sessionInput.value = "1";
  const overwriteBox = document.createElement("input");
  overwriteBox.type = "checkbox";

  const sessionRow = document.createElement("div");
  sessionRow.className = "control-row";
  sessionRow.append(
    labelled("player", playerInput),
    labelled("group", groupSelect),
    labelled("method", methodSelect),
    labelled("session", sessionInput),
    labelled("overwrite", overwriteBox),
    button("start session", () => {
      channel.send({
        type: "start_session",
        payload: {
          player_id: playerInput.value,
          group: groupSelect.value,
          method: methodSelect.value,
          session_index: Number(sessionInput.value),
          overwrite: overwriteBox.checked,
        },
      });
    })
  );

  const avatarRow = document.createElement("div");
  avatarRow.className = "control-row";
  ["Circle", "Square", "Triangle", "Diamond", "Heart", "Ring"].forEach(
    (label, id) => {
      avatarRow.appendChild(
        button(label, () => {
          channel.send({ type: "choose_avatar", payload: { avatar_id: id } });
        })
      );
    }
  );

  const seedInput = document.createElement("input");
  seedInput.type = "number";
  seedInput.value = "0";
  const scenarioRow = document.createElement("div");
  scenarioRow.className = "control-row";
  scenarioRow.appendChild(labelled("seed", seedInput));
  for (const level of ["Beginner", "Intermediate", "Advanced"]) {
    scenarioRow.appendChild(
      button(level, () => {
        channel.send({
          type: "choose_scenario",
          payload: { level, layout_seed: Number(seedInput.value) },
        });
      })
    );
  }

  const flowRow = document.createElement("div");
  flowRow.className = "control-row";
  flowRow.append(
    button("continue", () => {
      channel.send({ type: "continue" });
    }),
    button("quit", () => {
      channel.send({ type: "quit" });
    }),
    button("resync", () => {
      channel.send({ type: "resync" });
    })
  );

  controlsRoot.append(sessionRow, avatarRow, scenarioRow, flowRow);
}

// -- dashboard ---------------------------------------------------------

async function refreshDashboard(): Promise<void> {
  for (const [measure, target] of [
    ["time", dashboardTime],
    ["grade", dashboardGrade],
  ] as const) {
    try {
      const response = await fetch(`/api/report?measure=${measure}`);
      if (!response.ok) {
        target.textContent = "";
        const note = document.createElement("p");
        note.className = "placeholder";
        note.textContent =
          response.status === 422 ? "no data" : `report failed (${response.status})`;
        target.appendChild(note);
        continue;
      }
      renderDashboard(target, await response.json());
    } catch {
      target.textContent = "";
      const note = document.createElement("p");
      note.className = "placeholder";
      note.textContent = "report unreachable";
      target.appendChild(note);
    }
  }
}

function buildTabs(): void {
  const tabs = document.querySelectorAll<HTMLElement>("[data-tab]");
  const panels = document.querySelectorAll<HTMLElement>("[data-panel]");
  tabs.forEach((tab) => {
    tab.addEventListener("click", () => {
      tabs.forEach((t) => t.classList.toggle("active", t === tab));
      panels.forEach((panel) => {
        panel.hidden = panel.dataset.panel !== tab.dataset.tab;
      });
      if (tab.dataset.tab === "dashboard") {
        void refreshDashboard();
      }
    });
  });
}

// Debug fallback: a pointer can stand in for the sensor cursor while
// wiring up hardware.  Visual only; selections still come from the
// service, so this cannot play the game for the child.
function attachDebugPointer(): void {
  boardRoot.addEventListener("pointermove", (event) => {
    const grid = boardRoot.querySelector<HTMLElement>(".board-grid");
    if (!grid) {
      return;
    }
    const rect = grid.getBoundingClientRect();
    if (rect.width === 0 || rect.height === 0) {
      return;
    }
    view.cursor = {
      x: Math.min(1, Math.max(0, (event.clientX - rect.left) / rect.width)),
      y: Math.min(1, Math.max(0, 1 - (event.clientY - rect.top) / rect.height)),
      inBounds: true,
    };
    cursorDirty = true;
    scheduleRender();
  });
}

buildControls();
buildTabs();
const refreshButton = document.getElementById("refresh-reports");
refreshButton?.addEventListener("click", () => void refreshDashboard());
if (debugPointer) {
  attachDebugPointer();
}
channel.connect();
scheduleRender();
