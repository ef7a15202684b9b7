/**
 * The four figure families over a run directory's metrics CSV, plus the
 * eigenvector-demo convergence figure when a trace file is present:
 *
 *   coverage.svg     covered area per robot vs time and vs distance
 *   entropy.svg      normalized map entropy per robot vs time and distance
 *   discrepancy.svg  map (and, when present, plan) disagreement vs time
 *   bandwidth.svg    cumulative traffic per robot vs mean covered area
 *   eigen.svg        disagreement and angle-to-oracle vs iteration
 */

import { readFileSync, writeFileSync, existsSync } from "fs";
import { join } from "path";

import { MetricsTable, parseEigenTrace, parseMetricsCsv } from "./csv.js";
import { PanelSpec, Series, renderFigure } from "./svg.js";

function perRobot(
  table: MetricsTable,
  x: (r: { tick: number; distance_m: number }) => number,
  y: (r: {
    coverage_m2: number;
    h_norm: number;
    bytes_tx: number;
    bytes_rx: number;
  }) => number,
): Series[] {
  return table.robots.map((robot) => ({
    label: `robot ${robot}`,
    points: table.rows
      .filter((r) => r.robot === robot)
      .map((r) => [x(r), y(r)] as [number, number]),
  }));
}

function globalSeries(
  table: MetricsTable,
  y: (r: { phi_map: number; phi_plan: number | null }) => number,
): Series[] {
  const seen = new Map<number, number>();
  for (const r of table.rows) {
    if (!seen.has(r.tick)) seen.set(r.tick, y(r));
  }
  return [
    {
      label: "team",
      points: [...seen.entries()].sort((a, b) => a[0] - b[0]),
    },
  ];
}

export function coverageFigure(table: MetricsTable): string {
  const panels: PanelSpec[] = [
    {
      title: "Coverage vs time",
      xLabel: "tick",
      yLabel: "covered area [m^2]",
      series: perRobot(table, (r) => r.tick, (r) => r.coverage_m2),
    },
    {
      title: "Coverage vs distance traveled",
      xLabel: "distance [m]",
      yLabel: "covered area [m^2]",
      series: perRobot(table, (r) => r.distance_m, (r) => r.coverage_m2),
    },
  ];
  return renderFigure(panels);
}

export function entropyFigure(table: MetricsTable): string {
  const panels: PanelSpec[] = [
    {
      title: "Normalized map entropy vs time",
      xLabel: "tick",
      yLabel: "entropy [nats/cell]",
      series: perRobot(table, (r) => r.tick, (r) => r.h_norm),
    },
    {
      title: "Normalized map entropy vs distance",
      xLabel: "distance [m]",
      yLabel: "entropy [nats/cell]",
      series: perRobot(table, (r) => r.distance_m, (r) => r.h_norm),
    },
  ];
  return renderFigure(panels);
}

export function discrepancyFigure(table: MetricsTable): string {
  const panels: PanelSpec[] = [
    {
      title: "Map discrepancy vs time",
      xLabel: "tick",
      yLabel: "log10 discrepancy",
      series: globalSeries(table, (r) => r.phi_map),
      logY: true,
    },
  ];
  if (table.hasPhiPlan) {
    panels.push({
      title: "Plan discrepancy vs time",
      xLabel: "tick",
      yLabel: "log10 discrepancy",
      series: globalSeries(table, (r) => r.phi_plan ?? 0),
      logY: true,
    });
  }
  return renderFigure(panels);
}

export function bandwidthFigure(table: MetricsTable): string {
  const meanCoverage = new Map<number, number>();
  for (const tick of new Set(table.rows.map((r) => r.tick))) {
    const rows = table.rows.filter((r) => r.tick === tick);
    meanCoverage.set(tick, rows.reduce((a, r) => a + r.coverage_m2, 0) / rows.length);
  }
  const series = table.robots.map((robot) => ({
    label: `robot ${robot}`,
    points: table.rows
      .filter((r) => r.robot === robot)
      .map(
        (r) =>
          [meanCoverage.get(r.tick) ?? 0, (r.bytes_tx + r.bytes_rx) / 1024] as [
            number,
            number,
          ],
      ),
  }));
  return renderFigure([
    {
      title: "Traffic vs mean coverage",
      xLabel: "mean covered area [m^2]",
      yLabel: "cumulative tx+rx [KiB]",
      series,
    },
  ]);
}

export function eigenFigure(text: string): string {
  const rows = parseEigenTrace(text);
  return renderFigure([
    {
      title: "Eigenvector demo: disagreement",
      xLabel: "iteration",
      yLabel: "log10 phi",
      series: [{ label: "phi", points: rows.map((r) => [r.iter, r.phi] as [number, number]) }],
      logY: true,
    },
    {
      title: "Eigenvector demo: angle to oracle",
      xLabel: "iteration",
      yLabel: "log10 angle [rad]",
      series: [
        { label: "angle", points: rows.map((r) => [r.iter, r.angle] as [number, number]) },
      ],
      logY: true,
    },
  ]);
}

export function plotAll(inDir: string, outDir: string): string[] {
  const table = parseMetricsCsv(readFileSync(join(inDir, "metrics.csv"), "utf8"));
  const written: string[] = [];
  const figures: Array<[string, string]> = [
    ["coverage.svg", coverageFigure(table)],
    ["entropy.svg", entropyFigure(table)],
    ["discrepancy.svg", discrepancyFigure(table)],
    ["bandwidth.svg", bandwidthFigure(table)],
  ];
  const eigenPath = join(inDir, "eigen_trace.csv");
  if (existsSync(eigenPath)) {
    figures.push(["eigen.svg", eigenFigure(readFileSync(eigenPath, "utf8"))]);
  }
  for (const [name, svg] of figures) {
    const path = join(outDir, name);
    writeFileSync(path, svg);
    written.push(path);
  }
  return written;
}
