import { SampleRow, SeriesRow, SummaryRow, SchemaMismatchError } from "./csv";
import { gaussianKde, mean } from "./stats";
import { Frame, PALETTE, SvgDoc, drawYAxis, fmt, linearScale } from "./svg";

const GROUP_ORDER = ["L", "M", "H"];

function sortedGroups(values: Iterable<string>): string[] {
    const unique = [...new Set(values)];
    return unique.sort((a, b) => {
        const ia = GROUP_ORDER.indexOf(a);
        const ib = GROUP_ORDER.indexOf(b);
        if (ia !== -1 && ib !== -1) return ia - ib;
        if (ia !== -1) return -1;
        if (ib !== -1) return 1;
        return a.localeCompare(b);
    });
}

export interface FigureOptions {
    title?: string;
}

/** One violin per agent with its empirical mean marked. */
export function deviationViolin(samples: SampleRow[], options: FigureOptions = {}): string {
    if (samples.length === 0) {
        throw new SchemaMismatchError("no deviation samples to plot");
    }
    const byAgent = new Map<string, number[]>();
    for (const row of samples) {
        byAgent.set(row.agent_name, [...(byAgent.get(row.agent_name) ?? []), row.deviation]);
    }
    const agents = [...byAgent.keys()].sort();
    const slot = 90;
    const frame: Frame = { left: 60, right: 60 + agents.length * slot, top: 40, bottom: 320 };
    const doc = new SvgDoc(frame.right + 30, 370);
    const all = samples.map(s => s.deviation);
    const lo = Math.min(...all);
    const hi = Math.max(...all);
    const pad = hi === lo ? Math.max(Math.abs(hi), 1) * 0.1 : (hi - lo) * 0.08;
    const y = linearScale([lo - pad, hi + pad], [frame.bottom, frame.top]);
    doc.text((frame.left + frame.right) / 2, 20, options.title ?? "deviation distance per agent",
        'text-anchor="middle" font-size="13"');
    drawYAxis(doc, frame, y, "deviation distance");
    agents.forEach((agent, index) => {
        const cx = frame.left + slot * index + slot / 2;
        const values = byAgent.get(agent)!;
        const color = PALETTE[index % PALETTE.length];
        const kde = gaussianKde(values);
        if (kde.length === 1) {
            // Degenerate distribution: a flat bar at the single value.
            doc.line(cx - 18, y(kde[0].x), cx + 18, y(kde[0].x),
                `stroke="${color}" stroke-width="4" class="violin degenerate" data-agent="${agent}"`);
        } else {
            const maxDensity = Math.max(...kde.map(p => p.density));
            const half = slot * 0.38;
            const right = kde.map(p => `${fmt(cx + (p.density / maxDensity) * half)},${fmt(y(p.x))}`);
            const left = [...kde].reverse().map(p => `${fmt(cx - (p.density / maxDensity) * half)},${fmt(y(p.x))}`);
            doc.path(`M${right.join(" L")} L${left.join(" L")} Z`,
                `fill="${color}" fill-opacity="0.55" stroke="${color}" class="violin" data-agent="${agent}"`);
        }
        const m = mean(values);
        doc.line(cx - 22, y(m), cx + 22, y(m),
            `stroke="black" stroke-width="1.5" class="mean-marker" data-agent="${agent}" data-mean="${fmt(m)}"`);
        doc.text(cx, frame.bottom + 16, agent, 'text-anchor="middle" font-size="10"');
    });
    return doc.render();
}

/** Average payoffs per agent, clustered by configuration group when present. */
export function payoffBars(rows: SummaryRow[], options: FigureOptions = {}): string {
    const usable = rows.filter(r => r.mean_payoff !== null);
    if (usable.length === 0) {
        throw new SchemaMismatchError("no rows with a mean payoff to plot");
    }
    const agents = [...new Set(usable.map(r => r.agent_name))].sort();
    const groups = sortedGroups(usable.map(r => r.group || ""));
    const barWidth = 26;
    const cluster = Math.max(groups.length * (barWidth + 4) + 18, 70);
    const frame: Frame = { left: 64, right: 64 + agents.length * cluster, top: 40, bottom: 300 };
    const doc = new SvgDoc(frame.right + 140, 350);
    const payoffs = usable.map(r => r.mean_payoff as number);
    const lo = Math.min(0, ...payoffs);
    const hi = Math.max(0, ...payoffs);
    const pad = (hi - lo || 1) * 0.08;
    const y = linearScale([lo - pad, hi + pad], [frame.bottom, frame.top]);
    doc.text((frame.left + frame.right) / 2, 20, options.title ?? "average payoffs per agent",
        'text-anchor="middle" font-size="13"');
    drawYAxis(doc, frame, y, "average payoff");
    const baseline = y(0);
    doc.line(frame.left, baseline, frame.right, baseline, 'stroke="black" stroke-width="0.75"');
    const cell = new Map(usable.map(r => [`${r.agent_name}|${r.group || ""}`, r.mean_payoff as number]));
    agents.forEach((agent, ai) => {
        const x0 = frame.left + ai * cluster + 9;
        groups.forEach((group, gi) => {
            const value = cell.get(`${agent}|${group}`);
            if (value === undefined) return;
            const top = Math.min(y(value), baseline);
            const height = Math.abs(y(value) - baseline);
            doc.rect(x0 + gi * (barWidth + 4), top, barWidth, height,
                `fill="${PALETTE[gi % PALETTE.length]}" class="bar" data-agent="${agent}" data-group="${group || "all"}" data-value="${fmt(value)}"`);
        });
        doc.text(x0 + (groups.length * (barWidth + 4)) / 2, frame.bottom + 16, agent,
            'text-anchor="middle" font-size="10"');
    });
    if (groups.length > 1 || groups[0] !== "") {
        groups.forEach((group, gi) => {
            const ly = frame.top + gi * 16;
            doc.rect(frame.right + 16, ly - 8, 10, 10, `fill="${PALETTE[gi % PALETTE.length]}"`);
            doc.text(frame.right + 30, ly, group || "all", 'font-size="10" class="legend-entry"');
        });
    }
    return doc.render();
}

/** One line per agent over run indices: the path of chosen actions. */
export function convergencePaths(rows: SeriesRow[], options: FigureOptions = {}): string {
    if (rows.length === 0) {
        throw new SchemaMismatchError("no series points to plot");
    }
    const runIndices = [...new Set(rows.map(r => r.run_index))].sort((a, b) => a - b);
    const agents = [...new Set(rows.map(r => r.agent_name))].sort();
    const frame: Frame = { left: 60, right: 560, top: 40, bottom: 300 };
    const doc = new SvgDoc(700, 350);
    const actions = rows.map(r => r.action);
    const lo = Math.min(...actions);
    const hi = Math.max(...actions);
    const pad = (hi - lo || 1) * 0.08;
    const y = linearScale([lo - pad, hi + pad], [frame.bottom, frame.top]);
    const x = linearScale(
        [runIndices[0], runIndices[runIndices.length - 1] || runIndices[0] + 1],
        [frame.left + 20, frame.right - 20],
    );
    doc.text((frame.left + frame.right) / 2, 20, options.title ?? "path of chosen actions",
        'text-anchor="middle" font-size="13"');
    drawYAxis(doc, frame, y, "action");
    doc.line(frame.left, frame.bottom, frame.right, frame.bottom, 'stroke="black"');
    for (const run of runIndices) {
        doc.line(x(run), frame.bottom, x(run), frame.bottom + 4, 'stroke="black" class="x-tick"');
        doc.text(x(run), frame.bottom + 16, String(run), 'text-anchor="middle" font-size="10"');
    }
    doc.text((frame.left + frame.right) / 2, frame.bottom + 32, "run index",
        'text-anchor="middle" font-size="11"');
    agents.forEach((agent, index) => {
        const color = PALETTE[index % PALETTE.length];
        const points = runIndices
            .map(run => {
                const cells = rows.filter(r => r.agent_name === agent && r.run_index === run);
                return cells.length ? { run, value: mean(cells.map(c => c.action)) } : null;
            })
            .filter((p): p is { run: number; value: number } => p !== null);
        const d = points.map((p, i) => `${i === 0 ? "M" : "L"}${fmt(x(p.run))},${fmt(y(p.value))}`).join(" ");
        doc.path(d, `fill="none" stroke="${color}" stroke-width="2" class="series-line" data-agent="${agent}"`);
        const ly = frame.top + index * 16;
        doc.line(frame.right + 14, ly - 4, frame.right + 34, ly - 4, `stroke="${color}" stroke-width="2"`);
        doc.text(frame.right + 40, ly, agent, 'font-size="10" class="legend-entry"');
    });
    return doc.render();
}
