#!/usr/bin/env node
import { writeFileSync } from "fs";

import { convergencePaths, deviationViolin, payoffBars } from "./charts";
import { SchemaMismatchError, readSamples, readSeries, readSummary } from "./csv";
import { rulebreakTable } from "./table";

const KINDS = ["deviation-violin", "payoff-bars", "convergence-paths", "rulebreak-table"] as const;
type Kind = (typeof KINDS)[number];

const USAGE = `usage: figures <kind> --in <csv> --out <svg|md> [--title <text>]

kinds:
  deviation-violin    from a samples export (agent_name, deviation, ...)
  payoff-bars         from a summary export
  convergence-paths   from a series export (agent_name, run_index, action, ...)
  rulebreak-table     from a summary export, written as Markdown

Plots are written as SVG (vector); the table as Markdown.`;

interface Args {
    kind: Kind;
    input: string;
    output: string;
    title?: string;
}

function parseArgs(argv: string[]): Args {
    const [kind, ...rest] = argv;
    if (!kind || !(KINDS as readonly string[]).includes(kind)) {
        throw new Error(USAGE);
    }
    let input = "";
    let output = "";
    let title: string | undefined;
    for (let i = 0; i < rest.length; i += 2) {
        const flag = rest[i];
        const value = rest[i + 1];
        if (value === undefined) throw new Error(USAGE);
        if (flag === "--in") input = value;
        else if (flag === "--out") output = value;
        else if (flag === "--title") title = value;
        else throw new Error(USAGE);
    }
    if (!input || !output) throw new Error(USAGE);
    return { kind: kind as Kind, input, output, title };
}

function checkExtension(args: Args): void {
    const wantsMarkdown = args.kind === "rulebreak-table";
    if (wantsMarkdown && !args.output.endsWith(".md")) {
        throw new Error(`rulebreak-table writes Markdown: use an .md output path, got ${args.output}`);
    }
    if (!wantsMarkdown && !args.output.endsWith(".svg")) {
        throw new Error(
            `plots are written as SVG (no raster backend available): use an .svg output path, got ${args.output}`,
        );
    }
}

export function render(args: Args): string {
    switch (args.kind) {
        case "deviation-violin":
            return deviationViolin(readSamples(args.input), { title: args.title });
        case "payoff-bars":
            return payoffBars(readSummary(args.input), { title: args.title });
        case "convergence-paths":
            return convergencePaths(readSeries(args.input), { title: args.title });
        case "rulebreak-table":
            return rulebreakTable(readSummary(args.input));
    }
}

export function main(argv: string[]): number {
    let args: Args;
    try {
        args = parseArgs(argv);
        checkExtension(args);
        writeFileSync(args.output, render(args));
    } catch (error) {
        if (error instanceof SchemaMismatchError) {
            console.error(`schema mismatch: ${error.message}`);
            return 2;
        }
        console.error(error instanceof Error ? error.message : String(error));
        return 1;
    }
    console.log(`wrote ${args.output}`);
    return 0;
}

if (require.main === module) {
    process.exit(main(process.argv.slice(2)));
}
