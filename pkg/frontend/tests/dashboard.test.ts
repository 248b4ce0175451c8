import { readFileSync } from "node:fs";
import { beforeEach, describe, expect, it } from "vitest";

import { formatValue, renderDashboard } from "../src/dashboard.js";
import { BoxplotEntry, ComparisonReport } from "../src/protocol.js";

function loadReport(name: string): ComparisonReport {
  return JSON.parse(
    readFileSync(`tests/fixtures/${name}`, "utf8")
  );
}

function labelsOf(root: HTMLElement, selector: string): string[] {
  return Array.from(root.querySelectorAll(selector)).map(
    (node) => node.textContent ?? ""
  );
}

describe("renderDashboard", () => {
  let root: HTMLElement;

  beforeEach(() => {
    root = document.createElement("div");
    document.body.replaceChildren(root);
  });

  it("draws one box per group with the report's quartiles verbatim", () => {
    const report = loadReport("report_time.json");
    const warnings = renderDashboard(root, report);
    expect(warnings).toEqual([]);
    expect(root.querySelector(".warnings")).toBeNull();

    const boxes = root.querySelectorAll("g.box");
    expect(boxes).toHaveLength(2);
    report.boxplot_data.forEach((entry: BoxplotEntry, index: number) => {
      const box = boxes[index] as SVGGElement;
      expect(box.getAttribute("data-label")).toBe(entry.label);
      const median = box.querySelector(".value-label.median")?.textContent;
      const q1 = box.querySelector(".value-label.q1")?.textContent;
      const q3 = box.querySelector(".value-label.q3")?.textContent;
      const high = box.querySelector(".value-label.whisker-high")?.textContent;
      const low = box.querySelector(".value-label.whisker-low")?.textContent;
      expect(median).toBe(formatValue(entry.median));
      expect(q1).toBe(formatValue(entry.q1));
      expect(q3).toBe(formatValue(entry.q3));
      expect(high).toBe(formatValue(entry.whisker_high));
      expect(low).toBe(formatValue(entry.whisker_low));
      const outliers = box.querySelectorAll(".outlier");
      expect(outliers).toHaveLength(entry.outliers.length);
    });
  });

  it("places the lower-median group's line lower on the value axis", () => {
    const report = loadReport("report_time.json");
    renderDashboard(root, report);
    const byLabel = new Map<string, number>();
    for (const box of root.querySelectorAll("g.box")) {
      const label = box.getAttribute("data-label") ?? "";
      const median = box.querySelector("line.median");
      byLabel.set(label, Number(median?.getAttribute("y1")));
    }
    const manual = report.boxplot_data.find((b) => b.label === "Manual");
    const sg = report.boxplot_data.find((b) => b.label === "SG");
    expect(manual && sg).toBeTruthy();
    expect((sg as BoxplotEntry).median).toBeLessThan(
      (manual as BoxplotEntry).median
    );
    // Smaller value sits nearer the bottom, which is a larger y in SVG.
    expect(byLabel.get("SG")).toBeGreaterThan(byLabel.get("Manual") as number);
  });

  it("titles the chart with measure and unit and captions the test", () => {
    const report = loadReport("report_grade.json");
    renderDashboard(root, report);
    expect(root.querySelector("h3")?.textContent).toBe(
      `${report.measure} (${report.unit})`
    );
    const caption = root.querySelector(".caption")?.textContent ?? "";
    expect(caption).toContain(`p=${report.test.p_value.toExponential(3)}`);
    expect(caption).toContain(`Manual n=${report.n.Manual}`);
  });

  it("shows a placeholder when there is nothing to draw", () => {
    const report = loadReport("report_time.json");
    renderDashboard(root, { ...report, boxplot_data: [] });
    expect(root.querySelector(".placeholder")?.textContent).toBe("no data");
    expect(root.querySelector("svg")).toBeNull();
  });

  it("treats a non-object report as empty", () => {
    const warnings = renderDashboard(root, null);
    expect(root.querySelector(".placeholder")?.textContent).toBe("no data");
    expect(warnings.length).toBeGreaterThan(0);
  });

  it("renders what it can and lists warnings when fields are missing", () => {
    const report = loadReport("report_time.json");
    const [first, second] = report.boxplot_data as [BoxplotEntry, BoxplotEntry];
    const crippled = {
      ...report,
      boxplot_data: [
        first,
        {
          label: second.label,
          median: second.median,
          q1: second.q1,
          q3: second.q3,
          outliers: second.outliers,
        },
      ],
    };
    const warnings = renderDashboard(root, crippled);
    expect(warnings).toEqual([
      "SG: missing whisker_low",
      "SG: missing whisker_high",
    ]);
    const shown = labelsOf(root, ".warnings li");
    expect(shown).toEqual(warnings);

    // Both boxes still draw; the crippled one just has no whiskers.
    const boxes = root.querySelectorAll("g.box");
    expect(boxes).toHaveLength(2);
    const sgBox = boxes[1] as SVGGElement;
    expect(sgBox.querySelector("line.median")).not.toBeNull();
    expect(sgBox.querySelector(".iqr")).not.toBeNull();
    expect(sgBox.querySelector(".stem")).toBeNull();
    const manualBox = boxes[0] as SVGGElement;
    expect(manualBox.querySelectorAll(".stem")).toHaveLength(2);
  });

  it("repeated renders replace the chart instead of stacking", () => {
    const report = loadReport("report_time.json");
    renderDashboard(root, report);
    renderDashboard(root, report);
    expect(root.querySelectorAll("svg")).toHaveLength(1);
  });
});
