/**
 * Pure geometry for the two SVG plots. Everything here maps already-computed
 * numbers onto pixel coordinates; no scores or estimates are derived here.
 */

export interface XY {
  x: number;
  y: number;
}

export interface Frame {
  width: number;
  height: number;
  pad: number;
}

export const DEFAULT_FRAME: Frame = { width: 420, height: 220, pad: 32 };

export interface Scale {
  min: number;
  max: number;
  toPixel(value: number): number;
}

export function linearScale(
  min: number,
  max: number,
  pixelLow: number,
  pixelHigh: number,
): Scale {
  const span = max - min || 1;
  return {
    min,
    max,
    toPixel: (v) => pixelLow + ((v - min) / span) * (pixelHigh - pixelLow),
  };
}

export interface SeriesGeometry {
  name: string;
  points: (XY & { value: number; label: string })[];
  path: string;
}

export interface TrajectoryGeometry {
  frame: Frame;
  series: SeriesGeometry[];
  /** Tick positions on the score axis, value plus pixel offset. */
  ticks: (XY & { value: number })[];
}

export interface TrajectoryInput {
  version: number;
  overall: number;
  scores: Record<string, number>;
}

/**
 * Lay out the review trajectory: one line for the overall score and one per
 * scoring dimension, x by draft version order, y on the 1..10 review scale.
 */
export function trajectoryGeometry(
  reviews: TrajectoryInput[],
  frame: Frame = DEFAULT_FRAME,
): TrajectoryGeometry {
  const { width, height, pad } = frame;
  const xs = linearScale(0, Math.max(reviews.length - 1, 1), pad, width - pad);
  const ys = linearScale(1, 10, height - pad, pad);

  const dims = reviews.length > 0 ? Object.keys(reviews[0].scores) : [];
  const series: SeriesGeometry[] = [];

  const mkSeries = (name: string, pick: (r: TrajectoryInput) => number) => {
    const points = reviews.map((r, i) => ({
      x: xs.toPixel(i),
      y: ys.toPixel(pick(r)),
      value: pick(r),
      label: `v${r.version}`,
    }));
    const path = points
      .map((p, i) => `${i === 0 ? "M" : "L"}${p.x.toFixed(1)},${p.y.toFixed(1)}`)
      .join(" ");
    return { name, points, path };
  };

  series.push(mkSeries("overall", (r) => r.overall));
  for (const dim of dims) {
    series.push(mkSeries(dim, (r) => r.scores[dim]));
  }

  const ticks = [2, 4, 6, 8, 10].map((v) => ({
    value: v,
    x: pad,
    y: ys.toPixel(v),
  }));
  return { frame, series, ticks };
}

export interface EventStudyPoint extends XY {
  period: number;
  estimate: number;
  ciLowY: number;
  ciHighY: number;
  omitted: boolean;
}

export interface EventStudyGeometry {
  frame: Frame;
  points: EventStudyPoint[];
  zeroY: number;
}

export interface EventCoefficient {
  name: string;
  estimate: number;
  ci_low: number;
  ci_high: number;
}

function periodOf(name: string): number | null {
  const m = /^event_time\[(-?\d+)\]$/.exec(name);
  return m ? parseInt(m[1], 10) : null;
}

/**
 * Lay out an event-study coefficient plot: estimate dots with CI whiskers by
 * event time. The omitted baseline period is drawn as a zero point.
 */
export function eventStudyGeometry(
  coefficients: EventCoefficient[],
  omittedPeriod: number | null,
  frame: Frame = DEFAULT_FRAME,
): EventStudyGeometry {
  const coefs = coefficients
    .map((c) => ({ ...c, period: periodOf(c.name) }))
    .filter((c): c is EventCoefficient & { period: number } =>
      c.period !== null,
    )
    .sort((a, b) => a.period - b.period);

  const entries = coefs.map((c) => ({
    period: c.period,
    estimate: c.estimate,
    ciLow: c.ci_low,
    ciHigh: c.ci_high,
    omitted: false,
  }));
  if (omittedPeriod !== null) {
    entries.push({
      period: omittedPeriod,
      estimate: 0,
      ciLow: 0,
      ciHigh: 0,
      omitted: true,
    });
    entries.sort((a, b) => a.period - b.period);
  }

  const { width, height, pad } = frame;
  const periods = entries.map((e) => e.period);
  const values = entries.flatMap((e) => [e.ciLow, e.ciHigh, 0]);
  const xs = linearScale(
    Math.min(...periods, 0),
    Math.max(...periods, 0),
    pad,
    width - pad,
  );
  const ys = linearScale(
    Math.min(...values),
    Math.max(...values),
    height - pad,
    pad,
  );

  return {
    frame,
    zeroY: ys.toPixel(0),
    points: entries.map((e) => ({
      period: e.period,
      estimate: e.estimate,
      x: xs.toPixel(e.period),
      y: ys.toPixel(e.estimate),
      ciLowY: ys.toPixel(e.ciLow),
      ciHighY: ys.toPixel(e.ciHigh),
      omitted: e.omitted,
    })),
  };
}
