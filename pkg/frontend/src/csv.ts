import { readFileSync } from "fs";

export class SchemaMismatchError extends Error {
    constructor(message: string) {
        super(message);
        this.name = "SchemaMismatchError";
    }
}

/** Quote-aware CSV parser; handles embedded commas, quotes and newlines. */
export function parseCsv(text: string): string[][] {
    const rows: string[][] = [];
    let row: string[] = [];
    let field = "";
    let inQuotes = false;
    for (let i = 0; i < text.length; i++) {
        const ch = text[i];
        if (inQuotes) {
            if (ch === '"') {
                if (text[i + 1] === '"') {
                    field += '"';
                    i++;
                } else {
                    inQuotes = false;
                }
            } else {
                field += ch;
            }
        } else if (ch === '"') {
            inQuotes = true;
        } else if (ch === ",") {
            row.push(field);
            field = "";
        } else if (ch === "\n") {
            row.push(field);
            rows.push(row);
            row = [];
            field = "";
        } else if (ch !== "\r") {
            field += ch;
        }
    }
    if (field.length > 0 || row.length > 0) {
        row.push(field);
        rows.push(row);
    }
    return rows;
}

function asRecords(rows: string[][], required: string[], path: string): Record<string, string>[] {
    if (rows.length === 0) {
        throw new SchemaMismatchError(`${path}: empty file`);
    }
    const header = rows[0];
    for (const column of required) {
        if (!header.includes(column)) {
            throw new SchemaMismatchError(`${path}: missing column '${column}' (found: ${header.join(", ")})`);
        }
    }
    return rows.slice(1).filter(r => r.length > 1 || r[0] !== "").map(r => {
        const record: Record<string, string> = {};
        header.forEach((name, i) => (record[name] = r[i] ?? ""));
        return record;
    });
}

export interface SummaryRow {
    agent_name: string;
    environment: string;
    game: string;
    group: string;
    mean_payoff: number | null;
    rule_break_pct: string; // already 2-decimal formatted by the exporter
    completed: boolean;
}

export interface SampleRow {
    agent_name: string;
    deviation: number;
}

export interface SeriesRow {
    agent_name: string;
    run_index: number;
    seat: number;
    action: number;
}

const SUMMARY_COLUMNS = [
    "agent_name", "environment", "game", "group", "mean_payoff", "rule_break_pct", "completed",
];

export function readSummary(path: string): SummaryRow[] {
    const records = asRecords(parseCsv(readFileSync(path, "utf-8")), SUMMARY_COLUMNS, path);
    return records.map(r => ({
        agent_name: r.agent_name,
        environment: r.environment,
        game: r.game,
        group: r.group,
        mean_payoff: r.mean_payoff === "" ? null : Number(r.mean_payoff),
        rule_break_pct: r.rule_break_pct,
        completed: r.completed === "true",
    }));
}

export function readSamples(path: string): SampleRow[] {
    const records = asRecords(parseCsv(readFileSync(path, "utf-8")), ["agent_name", "deviation"], path);
    return records.map(r => ({ agent_name: r.agent_name, deviation: Number(r.deviation) }));
}

export function readSeries(path: string): SeriesRow[] {
    const records = asRecords(
        parseCsv(readFileSync(path, "utf-8")),
        ["agent_name", "run_index", "seat", "action"],
        path,
    );
    return records.map(r => ({
        agent_name: r.agent_name,
        run_index: Number(r.run_index),
        seat: Number(r.seat),
        action: Number(r.action),
    }));
}
