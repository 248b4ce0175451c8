/** Therapist dashboard: box-and-whisker charts for group comparisons.
 *
 * The chart is a plotter, not a calculator: quartiles, whiskers and
 * outliers are taken verbatim from the report payload.  Entries with
 * missing fields are drawn as far as their fields allow and flagged in
 * a warnings list instead of aborting the whole chart.
 */

import { BOX_FIELDS, BoxplotEntry, isNumber, isRecord } from "./protocol.js";

const SVG_NS = "http://www.w3.org/2000/svg";

const WIDTH = 340;
const HEIGHT = 260;
const MARGIN = { top: 16, right: 16, bottom: 32, left: 56 };
const BOX_COLORS = ["#5c9ded", "#f0a35e"];

/** Numbers are labelled with this many decimals everywhere. */
export const LABEL_DECIMALS = 2;

export function formatValue(value: number): string {
  return value.toFixed(LABEL_DECIMALS);
}

interface PartialBox {
  label: string;
  median?: number;
  q1?: number;
  q3?: number;
  whisker_low?: number;
  whisker_high?: number;
  outliers: number[];
}

interface ReadEntry {
  box: PartialBox;
  missing: string[];
}

function readEntry(entry: unknown, index: number): ReadEntry {
  const missing: string[] = [];
  const box: PartialBox = { label: `group ${index + 1}`, outliers: [] };
  if (!isRecord(entry)) {
    return { box, missing: ["entry is not an object"] };
  }
  if (typeof entry.label === "string") {
    box.label = entry.label;
  } else {
    missing.push("label");
  }
  for (const field of BOX_FIELDS) {
    const value = entry[field];
    if (isNumber(value)) {
      box[field] = value;
    } else {
      missing.push(field);
    }
  }
  if (Array.isArray(entry.outliers) && entry.outliers.every(isNumber)) {
    box.outliers = entry.outliers;
  } else if (entry.outliers !== undefined) {
    missing.push("outliers");
  }
  return { box, missing };
}

function svgEl(tag: string): SVGElement {
  return document.createElementNS(SVG_NS, tag);
}

function line(x1: number, y1: number, x2: number, y2: number, cls: string): SVGElement {
  const node = svgEl("line");
  node.setAttribute("x1", x1.toFixed(2));
  node.setAttribute("y1", y1.toFixed(2));
  node.setAttribute("x2", x2.toFixed(2));
  node.setAttribute("y2", y2.toFixed(2));
  node.setAttribute("class", cls);
  return node;
}

function text(x: number, y: number, value: string, cls: string): SVGElement {
  const node = svgEl("text");
  node.setAttribute("x", x.toFixed(2));
  node.setAttribute("y", y.toFixed(2));
  node.setAttribute("class", cls);
  node.textContent = value;
  return node;
}

function boxValues(box: PartialBox): number[] {
  const values = box.outliers.slice();
  for (const field of BOX_FIELDS) {
    const value = box[field];
    if (value !== undefined) {
      values.push(value);
    }
  }
  return values;
}

function drawBox(
  svg: SVGElement,
  box: PartialBox,
  center: number,
  toY: (v: number) => number,
  color: string
): void {
  const group = svgEl("g");
  group.setAttribute("class", "box");
  group.setAttribute("data-label", box.label);
  const half = 34;

  if (box.q1 !== undefined && box.q3 !== undefined) {
    const rect = svgEl("rect");
    rect.setAttribute("x", (center - half).toFixed(2));
    rect.setAttribute("y", toY(box.q3).toFixed(2));
    rect.setAttribute("width", (half * 2).toFixed(2));
    rect.setAttribute("height", Math.max(1, toY(box.q1) - toY(box.q3)).toFixed(2));
    rect.setAttribute("fill", color);
    rect.setAttribute("fill-opacity", "0.45");
    rect.setAttribute("stroke", color);
    rect.setAttribute("class", "iqr");
    group.appendChild(rect);
    group.appendChild(
      text(center + half + 4, toY(box.q3) + 4, formatValue(box.q3), "value-label q3")
    );
    group.appendChild(
      text(center + half + 4, toY(box.q1) + 4, formatValue(box.q1), "value-label q1")
    );
  }

  if (box.median !== undefined) {
    const y = toY(box.median);
    const median = line(center - half, y, center + half, y, "median");
    median.setAttribute("stroke", "#222");
    median.setAttribute("stroke-width", "2");
    median.setAttribute("data-value", formatValue(box.median));
    group.appendChild(median);
    group.appendChild(
      text(center - half - 4, y + 4, formatValue(box.median), "value-label median")
    );
  }

  const stem = (from: number | undefined, to: number | undefined, cls: string) => {
    if (from === undefined || to === undefined) {
      return;
    }
    const whisker = line(center, toY(from), center, toY(to), `stem ${cls}`);
    whisker.setAttribute("stroke", "#555");
    group.appendChild(whisker);
    const cap = line(center - half / 2, toY(to), center + half / 2, toY(to), cls);
    cap.setAttribute("stroke", "#555");
    group.appendChild(cap);
    group.appendChild(
      text(center + half / 2 + 4, toY(to) + 4, formatValue(to), `value-label ${cls}`)
    );
  };
  stem(box.q3, box.whisker_high, "whisker-high");
  stem(box.q1, box.whisker_low, "whisker-low");

  for (const value of box.outliers) {
    const dot = svgEl("circle");
    dot.setAttribute("cx", center.toFixed(2));
    dot.setAttribute("cy", toY(value).toFixed(2));
    dot.setAttribute("r", "3");
    dot.setAttribute("fill", "none");
    dot.setAttribute("stroke", "#c62828");
    dot.setAttribute("class", "outlier");
    group.appendChild(dot);
  }

  group.appendChild(
    text(center, HEIGHT - MARGIN.bottom + 18, box.label, "axis-label")
  );
  svg.appendChild(group);
}

/** Draw one comparison report into `root`.  Returns the warnings that
 * were rendered so callers can log or test them. */
export function renderDashboard(root: HTMLElement, report: unknown): string[] {
  root.textContent = "";
  const warnings: string[] = [];

  if (!isRecord(report)) {
    root.appendChild(placeholder("no data"));
    return ["report is not an object"];
  }

  const measure = typeof report.measure === "string" ? report.measure : "measure";
  const unit = typeof report.unit === "string" ? report.unit : "";
  const entries = Array.isArray(report.boxplot_data) ? report.boxplot_data : null;

  const title = document.createElement("h3");
  title.textContent = unit ? `${measure} (${unit})` : measure;
  root.appendChild(title);

  if (!entries || entries.length === 0) {
    root.appendChild(placeholder("no data"));
    if (!entries) {
      warnings.push("boxplot_data missing");
    }
    renderWarnings(root, warnings);
    return warnings;
  }

  const read = entries.map(readEntry);
  for (const { box, missing } of read) {
    for (const field of missing) {
      warnings.push(`${box.label}: missing ${field}`);
    }
  }

  const values = read.flatMap(({ box }) => boxValues(box));
  if (values.length === 0) {
    root.appendChild(placeholder("no data"));
    renderWarnings(root, warnings);
    return warnings;
  }
  let lo = Math.min(...values);
  let hi = Math.max(...values);
  if (hi - lo < 1e-9) {
    lo -= 1;
    hi += 1;
  }
  const pad = (hi - lo) * 0.08;
  lo -= pad;
  hi += pad;

  const plotTop = MARGIN.top;
  const plotBottom = HEIGHT - MARGIN.bottom;
  const toY = (v: number) =>
    plotBottom - ((v - lo) / (hi - lo)) * (plotBottom - plotTop);

  const svg = svgEl("svg");
  svg.setAttribute("viewBox", `0 0 ${WIDTH} ${HEIGHT}`);
  svg.setAttribute("class", "boxplot");
  svg.setAttribute("data-measure", measure);

  const axis = line(MARGIN.left - 8, plotTop, MARGIN.left - 8, plotBottom, "axis");
  axis.setAttribute("stroke", "#888");
  svg.appendChild(axis);
  svg.appendChild(text(MARGIN.left - 12, plotTop + 4, formatValue(hi), "axis-tick"));
  svg.appendChild(text(MARGIN.left - 12, plotBottom + 4, formatValue(lo), "axis-tick"));

  const innerWidth = WIDTH - MARGIN.left - MARGIN.right;
  read.forEach(({ box }, index) => {
    const center = MARGIN.left + (innerWidth * (index + 0.5)) / read.length;
    drawBox(svg, box, center, toY, BOX_COLORS[index % BOX_COLORS.length] ?? "#888");
  });
  root.appendChild(svg);

  renderCaption(root, report);
  renderWarnings(root, warnings);
  return warnings;
}

function placeholder(message: string): HTMLElement {
  const node = document.createElement("p");
  node.className = "placeholder";
  node.textContent = message;
  return node;
}

function renderCaption(root: HTMLElement, report: Record<string, unknown>): void {
  const bits: string[] = [];
  if (isRecord(report.n)) {
    const counts = Object.entries(report.n)
      .filter(([, v]) => isNumber(v))
      .map(([k, v]) => `${k} n=${v}`);
    if (counts.length > 0) {
      bits.push(counts.join(", "));
    }
  }
  if (isRecord(report.test)) {
    const { method, p_value } = report.test;
    if (typeof method === "string" && isNumber(p_value)) {
      bits.push(`${method}: p=${p_value.toExponential(3)}`);
    }
  }
  if (bits.length > 0) {
    const caption = document.createElement("p");
    caption.className = "caption";
    caption.textContent = bits.join(" · ");
    root.appendChild(caption);
  }
}

function renderWarnings(root: HTMLElement, warnings: string[]): void {
  if (warnings.length === 0) {
    return;
  }
  const list = document.createElement("ul");
  list.className = "warnings";
  for (const warning of warnings) {
    const item = document.createElement("li");
    item.textContent = warning;
    list.appendChild(item);
  }
  root.appendChild(list);
}

export type { BoxplotEntry };
