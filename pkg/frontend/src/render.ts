/** DOM rendering for the board view.
 *
 * `render` rebuilds the phase screen from a BoardView snapshot; the
 * cursor and dwell ring are updated in place so pointer motion stays a
 * cheap style write.  All drawing is derived from view state, which in
 * turn mirrors service messages.
 */

import { BoardView } from "./board.js";

export interface CharacterArt {
  id: number;
  name: string;
  color: string;
  /** SVG path in a 0..100 viewBox. */
  path: string;
}

/** Stand-in art: nine shapes, each with its own color and silhouette. */
export const CHARACTER_ART: readonly CharacterArt[] = [
  { id: 0, name: "Sun", color: "#f5a623", path: "M50 10 A40 40 0 1 1 49.9 10 Z" },
  { id: 1, name: "Moon", color: "#b39ddb", path: "M65 10 A42 42 0 1 0 65 90 A34 34 0 1 1 65 10 Z" },
  { id: 2, name: "Star", color: "#ffd54f", path: "M50 8 L61 38 L93 38 L67 57 L77 88 L50 69 L23 88 L33 57 L7 38 L39 38 Z" },
  { id: 3, name: "Cloud", color: "#90caf9", path: "M30 70 A15 15 0 1 1 38 42 A18 18 0 0 1 72 46 A13 13 0 1 1 74 70 Z" },
  { id: 4, name: "Tree", color: "#81c784", path: "M50 8 L75 48 L62 48 L80 78 L56 78 L56 92 L44 92 L44 78 L20 78 L38 48 L25 48 Z" },
  { id: 5, name: "Fish", color: "#4fc3f7", path: "M12 50 A30 22 0 1 1 72 50 A30 22 0 1 1 12 50 M72 50 L92 32 L92 68 Z" },
  { id: 6, name: "Bird", color: "#e57373", path: "M10 60 Q30 20 55 40 Q80 20 90 35 Q75 45 70 60 Q50 85 25 72 Z" },
  { id: 7, name: "Boat", color: "#8d6e63", path: "M15 65 L85 65 L70 85 L30 85 Z M52 12 L52 60 L80 60 Z" },
  { id: 8, name: "Kite", color: "#ba68c8", path: "M50 5 L80 45 L50 85 L20 45 Z" },
];

function characterArt(id: number): CharacterArt {
  const art = CHARACTER_ART[id];
  if (art) {
    return art;
  }
  return { id, name: `#${id}`, color: "#9e9e9e", path: "M20 20 H80 V80 H20 Z" };
}

function spriteSvg(art: CharacterArt): string {
  return (
    `<svg viewBox="0 0 100 100" role="img" aria-label="${art.name}">` +
    `<path d="${art.path}" fill="${art.color}"/></svg>`
  );
}

function el(tag: string, className: string, text?: string): HTMLElement {
  const node = document.createElement(tag);
  node.className = className;
  if (text !== undefined) {
    node.textContent = text;
  }
  return node;
}

function renderBanner(root: HTMLElement, view: BoardView): void {
  if (!view.banner) {
    return;
  }
  const banner = el("div", "banner", view.banner);
  banner.setAttribute("role", "alert");
  root.appendChild(banner);
}

function renderLogin(root: HTMLElement): void {
  const screen = el("section", "screen login-screen");
  screen.appendChild(el("h2", "", "Who is playing?"));
  screen.appendChild(
    el("p", "hint", "Pick an avatar and start a session from the controls.")
  );
  root.appendChild(screen);
}

function renderCinematic(root: HTMLElement, view: BoardView): void {
  const screen = el("section", "screen cinematic-screen");
  const name = view.state?.player_name ?? "friend";
  screen.appendChild(el("h2", "", `Welcome, ${name}!`));
  screen.appendChild(el("p", "hint", "The story is playing..."));
  root.appendChild(screen);
}

function renderMenu(root: HTMLElement): void {
  const screen = el("section", "screen menu-screen");
  screen.appendChild(el("h2", "", "Choose a scenario"));
  screen.appendChild(el("p", "hint", "Beginner, Intermediate or Advanced."));
  root.appendChild(screen);
}

function renderCounters(view: BoardView): HTMLElement {
  const bar = el("div", "counters");
  const ok = el("span", "counter success");
  ok.textContent = `✓ ${view.successes}`;
  const bad = el("span", "counter failure");
  bad.textContent = `✗ ${view.failures}`;
  bar.append(ok, bad);
  return bar;
}

function renderTargetPanel(view: BoardView): HTMLElement {
  const panel = el("div", "target-panel");
  const target = view.currentTarget();
  if (target === null) {
    panel.appendChild(el("span", "", "All found!"));
    return panel;
  }
  const art = characterArt(target);
  panel.appendChild(el("span", "", "Find:"));
  const sprite = el("span", "target-sprite");
  sprite.innerHTML = spriteSvg(art);
  panel.appendChild(sprite);
  panel.appendChild(el("span", "target-name", art.name));
  return panel;
}

function renderBoard(root: HTMLElement, view: BoardView): void {
  const screen = el("section", "screen board-screen");
  screen.appendChild(renderTargetPanel(view));
  screen.appendChild(renderCounters(view));

  const grid = el("div", "board-grid");
  const occupied = view.occupiedCells();
  const matched = new Set(view.state?.round?.matched ?? []);
  for (let cell = 0; cell < 9; cell += 1) {
    const slot = el("div", "cell");
    slot.dataset.cell = String(cell);
    const character = occupied.get(cell);
    if (character !== undefined) {
      const art = characterArt(character);
      const sprite = el("div", "sprite");
      sprite.dataset.character = String(character);
      sprite.innerHTML = spriteSvg(art);
      if (matched.has(character)) {
        sprite.classList.add("matched");
      }
      slot.appendChild(sprite);
    }
    if (view.cursorCell === cell) {
      slot.classList.add("hovered");
    }
    grid.appendChild(slot);
  }

  const cursor = el("div", "cursor");
  cursor.appendChild(el("div", "dwell-ring"));
  grid.appendChild(cursor);
  screen.appendChild(grid);
  root.appendChild(screen);
  updateCursor(root, view);
}

function renderResult(root: HTMLElement, view: BoardView): void {
  const screen = el("section", "screen result-screen");
  const result = view.lastResult;
  screen.appendChild(el("h2", "", "Round over"));
  if (result) {
    const card = el("div", "result-card");
    card.appendChild(el("div", "grade", String(result.grade)));
    if (result.meaning !== null) {
      card.appendChild(el("div", "meaning", result.meaning));
    }
    card.appendChild(
      el(
        "div",
        "tally",
        `${result.successes} found, ${result.failures} missed, ` +
          `${result.elapsed_s.toFixed(1)} s`
      )
    );
    if (!result.complete) {
      card.appendChild(el("div", "partial", "Round ended early"));
    }
    screen.appendChild(card);
  } else {
    screen.appendChild(el("p", "hint", "Waiting for the score..."));
  }
  root.appendChild(screen);
}

function renderFeedback(root: HTMLElement): void {
  const screen = el("section", "screen feedback-screen");
  screen.appendChild(el("h2", "", "Great job!"));
  screen.appendChild(el("p", "hint", "Ready for another round?"));
  root.appendChild(screen);
}

/** Rebuild the phase screen for the current view state. */
export function render(root: HTMLElement, view: BoardView): void {
  root.textContent = "";
  renderBanner(root, view);
  switch (view.phase) {
    case "Cinematic":
      renderCinematic(root, view);
      break;
    case "ScenarioMenu":
      renderMenu(root);
      break;
    case "InRound":
      renderBoard(root, view);
      break;
    case "RoundResult":
      renderResult(root, view);
      break;
    case "Feedback":
      renderFeedback(root);
      break;
    default:
      renderLogin(root);
  }
}

/** Move the cursor and dwell ring without rebuilding the screen. */
export function updateCursor(root: HTMLElement, view: BoardView): void {
  const cursor = root.querySelector<HTMLElement>(".cursor");
  if (!cursor) {
    return;
  }
  if (!view.cursor) {
    cursor.style.display = "none";
    return;
  }
  cursor.style.display = "block";
  cursor.style.left = `${(view.cursor.x * 100).toFixed(2)}%`;
  // Sensor y grows away from the sensor row; screens grow downward.
  cursor.style.top = `${((1 - view.cursor.y) * 100).toFixed(2)}%`;
  cursor.classList.toggle("out-of-bounds", !view.cursor.inBounds);
  const ring = cursor.querySelector<HTMLElement>(".dwell-ring");
  if (ring) {
    const angle = Math.round(view.dwellProgress * 360);
    ring.style.background = `conic-gradient(#2e7d32 ${angle}deg, rgba(0,0,0,0.15) ${angle}deg)`;
    ring.dataset.progress = view.dwellProgress.toFixed(3);
  }
}
