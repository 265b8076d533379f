import { mkdtempSync, readFileSync, writeFileSync } from "fs";
import { tmpdir } from "os";
import { join } from "path";
import { describe, expect, it } from "vitest";

import { convergencePaths, deviationViolin, payoffBars } from "../src/charts";
import { SchemaMismatchError, readSamples, readSeries, readSummary } from "../src/csv";
import { main } from "../src/cli";
import { rulebreakTable } from "../src/table";

const FIXTURES = join(__dirname, "..", "fixtures");
const GOLDEN = join(__dirname, "rulebreak_table.golden.md");

function tempFile(name: string, content: string): string {
    const dir = mkdtempSync(join(tmpdir(), "figures-"));
    const path = join(dir, name);
    writeFileSync(path, content);
    return path;
}

describe("rule-break table", () => {
    it("matches the golden rendering of the violator fixture", () => {
        const rows = readSummary(join(FIXTURES, "rulebreak_summary.csv"));
        expect(rulebreakTable(rows)).toBe(readFileSync(GOLDEN, "utf-8"));
    });

    it("renders missing cells as em dashes", () => {
        const csv = [
            "agent_name,environment,game,group,n_sessions,n_runs,mean_payoff,payoff_ratio,mean_deviation,rule_break_pct,win_rate,completed",
            "a,melee,beauty_contest,L,1,1,0.2,1.0,0.0,0.67,1.0,true",
            "b,melee,beauty_contest,M,1,1,0.2,1.0,0.0,0.00,1.0,true",
        ].join("\n");
        const table = rulebreakTable(readSummary(tempFile("s.csv", csv)));
        expect(table).toContain("0.67");
        expect(table).toContain("—");
        const lRow = table.split("\n").find(line => line.includes("| L |"))!;
        expect(lRow).toContain("| 0.67 | — |");
    });
});

describe("deviation violins", () => {
    it("draws one violin and one mean marker per agent, surviving all-zero samples", () => {
        const samples = readSamples(join(FIXTURES, "ne_samples.csv"));
        expect(samples.every(s => s.deviation === 0)).toBe(true);
        const svg = deviationViolin(samples);
        expect(svg.match(/class="violin degenerate"/g)).toHaveLength(5);
        expect(svg.match(/class="mean-marker"/g)).toHaveLength(5);
    });

    it("marks empirical means at the right heights", () => {
        const lines = ["agent_name,environment,game,group,session_id,run_index,seat,deviation"];
        for (let i = 0; i < 40; i++) {
            lines.push(`low,melee,beauty_contest,,s,1,0,${0.1 + 0.01 * Math.sin(i)}`);
            lines.push(`high,melee,beauty_contest,,s,1,1,${0.3 + 0.01 * Math.cos(i)}`);
        }
        const svg = deviationViolin(readSamples(tempFile("samples.csv", lines.join("\n"))));
        const markers = [...svg.matchAll(/class="mean-marker" data-agent="(\w+)" data-mean="([\d.]+)"/g)];
        const means = Object.fromEntries(markers.map(m => [m[1], Number(m[2])]));
        expect(means.low).toBeCloseTo(0.1, 2);
        expect(means.high).toBeCloseTo(0.3, 2);
        const ys = Object.fromEntries(
            [...svg.matchAll(/y1="([\d.]+)" x2="[\d.]+" y2="[\d.]+" stroke="black" stroke-width="1.5" class="mean-marker" data-agent="(\w+)"/g)]
                .map(m => [m[2], Number(m[1])]),
        );
        expect(ys.high).toBeLessThan(ys.low); // higher mean sits higher on screen
    });

    it("renders smooth violins for spread-out samples", () => {
        const lines = ["agent_name,environment,game,group,session_id,run_index,seat,deviation"];
        for (let i = 0; i < 60; i++) {
            lines.push(`spread,melee,beauty_contest,,s,1,0,${(i % 10) / 10}`);
        }
        const svg = deviationViolin(readSamples(tempFile("samples.csv", lines.join("\n"))));
        expect(svg).toContain('class="violin"');
        expect(svg).not.toContain("degenerate");
    });
});

describe("payoff bars", () => {
    it("draws one bar per agent per configuration group", () => {
        const svg = payoffBars(readSummary(join(FIXTURES, "groups_summary.csv")));
        expect(svg.match(/class="bar"/g)).toHaveLength(15); // 5 agents x L/M/H
        for (const group of ["L", "M", "H"]) {
            expect(svg).toContain(`data-group="${group}"`);
        }
        expect(svg.match(/class="legend-entry"/g)).toHaveLength(3);
    });

    it("renders ungrouped summaries without a legend", () => {
        const svg = payoffBars(readSummary(join(FIXTURES, "ne_summary.csv")));
        expect(svg.match(/class="bar"/g)).toHaveLength(5);
        expect(svg).not.toContain("legend-entry");
    });

    it("draws negative payoffs below the zero baseline", () => {
        const csv = [
            "agent_name,environment,game,group,n_sessions,n_runs,mean_payoff,payoff_ratio,mean_deviation,rule_break_pct,win_rate,completed",
            "loser,melee,second_price_auction,,1,10,-25.0,0.5,0.2,0.00,0.1,true",
            "winner,melee,second_price_auction,,1,10,50.0,1.1,0.1,0.00,0.6,true",
        ].join("\n");
        const svg = payoffBars(readSummary(tempFile("s.csv", csv)));
        const baseline = Number(
            svg.match(/<line x1="64" y1="([\d.]+)" x2="[\d.]+" y2="[\d.]+" stroke="black" stroke-width="0.75"\/>/)![1],
        );
        const bars = [...svg.matchAll(/<rect x="[\d.]+" y="([\d.]+)" width="[\d.]+" height="([\d.]+)" fill="[^"]+" class="bar" data-agent="(\w+)"/g)];
        const byAgent = Object.fromEntries(bars.map(b => [b[3], { y: Number(b[1]), h: Number(b[2]) }]));
        expect(byAgent.winner.y).toBeLessThan(baseline);
        expect(byAgent.loser.y).toBeCloseTo(baseline, 3); // grows downward from zero
        expect(byAgent.loser.h).toBeGreaterThan(0);
    });
});

describe("convergence paths", () => {
    it("draws one x tick per run of the 6-run history fixture", () => {
        const svg = convergencePaths(readSeries(join(FIXTURES, "history_series.csv")));
        expect(svg.match(/class="x-tick"/g)).toHaveLength(6);
        expect(svg.match(/class="series-line"/g)).toHaveLength(1);
        expect(svg).toContain('data-agent="replay"');
    });

    it("renders a constant series as a flat line", () => {
        const lines = ["agent_name,environment,game,group,session_id,run_index,seat,action"];
        for (let run = 1; run <= 5; run++) lines.push(`flat,melee,beauty_contest,,s,${run},0,7.5`);
        const svg = convergencePaths(readSeries(tempFile("series.csv", lines.join("\n"))));
        const d = svg.match(/<path d="([^"]+)" fill="none"/)![1];
        const ys = new Set([...d.matchAll(/,([\d.]+)/g)].map(m => m[1]));
        expect(ys.size).toBe(1);
    });

    it("draws one legend entry per agent", () => {
        const lines = ["agent_name,environment,game,group,session_id,run_index,seat,action"];
        for (let run = 1; run <= 4; run++) {
            lines.push(`a,melee,beauty_contest,,s,${run},0,${10 - run}`);
            lines.push(`b,melee,beauty_contest,,s,${run},1,${20 - 2 * run}`);
        }
        const svg = convergencePaths(readSeries(tempFile("series.csv", lines.join("\n"))));
        expect(svg.match(/class="series-line"/g)).toHaveLength(2);
        expect(svg.match(/class="legend-entry"/g)).toHaveLength(2);
    });
});

describe("determinism and schema checks", () => {
    it("repeated renders are byte-identical", () => {
        const samples = readSamples(join(FIXTURES, "ne_samples.csv"));
        expect(deviationViolin(samples)).toBe(deviationViolin(samples));
        const rows = readSummary(join(FIXTURES, "groups_summary.csv"));
        expect(payoffBars(rows)).toBe(payoffBars(rows));
        expect(rulebreakTable(rows)).toBe(rulebreakTable(rows));
    });

    it("rejects inputs with the wrong columns", () => {
        expect(() => readSamples(join(FIXTURES, "ne_summary.csv"))).toThrow(SchemaMismatchError);
        expect(() => readSeries(join(FIXTURES, "ne_summary.csv"))).toThrow(SchemaMismatchError);
    });
});

describe("cli", () => {
    it("renders every figure kind from the fixture exports", () => {
        const dir = mkdtempSync(join(tmpdir(), "figures-cli-"));
        const jobs: Array<[string, string, string]> = [
            ["deviation-violin", "ne_samples.csv", "violin.svg"],
            ["payoff-bars", "groups_summary.csv", "bars.svg"],
            ["convergence-paths", "history_series.csv", "paths.svg"],
            ["rulebreak-table", "rulebreak_summary.csv", "table.md"],
        ];
        for (const [kind, input, output] of jobs) {
            const code = main([kind, "--in", join(FIXTURES, input), "--out", join(dir, output)]);
            expect(code).toBe(0);
            expect(readFileSync(join(dir, output), "utf-8").length).toBeGreaterThan(100);
        }
    });

    it("refuses raster output paths", () => {
        const code = main([
            "deviation-violin",
            "--in", join(FIXTURES, "ne_samples.csv"),
            "--out", "/tmp/nope.png",
        ]);
        expect(code).toBe(1);
    });

    it("reports schema mismatches with a distinct exit code", () => {
        const code = main([
            "deviation-violin",
            "--in", join(FIXTURES, "ne_summary.csv"),
            "--out", "/tmp/nope.svg",
        ]);
        expect(code).toBe(2);
    });
});
