/**
 * Readers for the versioned artifacts a run directory contains.
 *
 * Every artifact self-identifies: CSV files open with a `# schema=<id>`
 * comment line and JSON documents carry `schema` / `schema_version`
 * fields.  Loaders here refuse to parse anything whose identifier does
 * not match what the caller expects, so a renderer never silently draws
 * from an incompatible file.
 */

import { readFileSync } from 'node:fs';
import { join } from 'node:path';

export const TRACE_SCHEMA = 'stldmp.trace/1';
export const EXECUTION_SCHEMA = 'stldmp.execution/1';
export const PLAN_SCHEMA = 'stldmp.plan/1';
export const BLUEPRINT_SCHEMA = 'stldmp.blueprint/1';
export const EVALUATION_SCHEMA = 'stldmp.evaluation/1';
export const REPORT_SCHEMA_VERSION = 1;

/** Raised when an artifact is missing, malformed, or the wrong version. */
export class ArtifactError extends Error {}

/** A parsed schema-tagged CSV table. */
export interface CsvTable {
  /** Schema identifier from the leading comment line. */
  schema: string;
  /** Column names from the header row. */
  columns: string[];
  /** Raw cell strings, one array per data row. */
  cells: string[][];
}

/** Per-subtask optimization report (plan/<subtask>/report.json). */
export interface OptimizationReport {
  schema_version: number;
  subtask: string;
  skill: string;
  constraint: string;
  status: string;
  iterations: number;
  robustness_exact: number;
  objective_history: number[];
  y_init: number[];
  y_goal: number[];
}

/** Loads and validates a schema-tagged CSV file. */
export function loadCsv(path: string, expectedSchema: string): CsvTable {
  const text = readText(path);
  const lines = text
    .split('\n')
    .map((line) => (line.endsWith('\r') ? line.slice(0, -1) : line))
    .filter((line) => line.length > 0);
  const first = lines[0] ?? '';
  const match = /^# schema=(\S+)$/.exec(first);
  if (!match) {
    throw new ArtifactError(`${path}: missing '# schema=' header line`);
  }
  const schema = match[1]!;
  if (schema !== expectedSchema) {
    throw new ArtifactError(
      `${path}: schema mismatch: found '${schema}', this tool reads '${expectedSchema}'`,
    );
  }
  if (lines.length < 2) {
    throw new ArtifactError(`${path}: no header row after the schema line`);
  }
  const columns = lines[1]!.split(',');
  const cells = lines.slice(2).map((line) => line.split(','));
  for (const row of cells) {
    if (row.length !== columns.length) {
      throw new ArtifactError(
        `${path}: row has ${row.length} cells, header has ${columns.length}`,
      );
    }
  }
  return { schema, columns, cells };
}

/** Extracts a numeric column; fails loudly if the channel is absent. */
export function numericColumn(table: CsvTable, name: string): number[] {
  const index = table.columns.indexOf(name);
  if (index < 0) {
    throw new ArtifactError(
      `channel '${name}' not present; available: ${table.columns.join(', ')}`,
    );
  }
  return table.cells.map((row, i) => {
    const cell = row[index]!;
    const value = Number(cell);
    if (cell === '' || Number.isNaN(value)) {
      throw new ArtifactError(`channel '${name}' row ${i}: not a number: '${cell}'`);
    }
    return value;
  });
}

/** Extracts a column as raw strings (for status-like fields). */
export function stringColumn(table: CsvTable, name: string): string[] {
  const index = table.columns.indexOf(name);
  if (index < 0) {
    throw new ArtifactError(
      `column '${name}' not present; available: ${table.columns.join(', ')}`,
    );
  }
  return table.cells.map((row) => row[index]!);
}

/** Loads a JSON document and checks its schema identifier and version. */
export function loadJson(path: string, expectedSchema: string): Record<string, unknown> {
  const doc = parseJson(path);
  const schema = doc['schema'];
  if (schema !== expectedSchema) {
    throw new ArtifactError(
      `${path}: schema mismatch: found '${String(schema)}', this tool reads '${expectedSchema}'`,
    );
  }
  return doc;
}

/** Loads a per-subtask optimization report and checks its version. */
export function loadReport(runDir: string, subtask: string): OptimizationReport {
  const path = join(runDir, 'plan', subtask, 'report.json');
  const doc = parseJson(path);
  if (doc['schema_version'] !== REPORT_SCHEMA_VERSION) {
    throw new ArtifactError(
      `${path}: schema_version ${String(doc['schema_version'])} is not ` +
        `${REPORT_SCHEMA_VERSION}`,
    );
  }
  return doc as unknown as OptimizationReport;
}

/** Loads a subtask's planned trace (plan/<subtask>/trace.csv). */
export function loadPlanTrace(runDir: string, subtask: string): CsvTable {
  return loadCsv(join(runDir, 'plan', subtask, 'trace.csv'), TRACE_SCHEMA);
}

/** Loads the executed trajectory log (run/execution.csv). */
export function loadExecution(runDir: string): CsvTable {
  return loadCsv(join(runDir, 'run', 'execution.csv'), EXECUTION_SCHEMA);
}

/** Lists subtask names in task order, from the plan summary and blueprint. */
export function listSubtasks(runDir: string): string[] {
  const blueprint = loadJson(join(runDir, 'plan', 'blueprint.json'), BLUEPRINT_SCHEMA);
  const root = blueprint['root'] as { children?: { name?: string }[] } | undefined;
  const names = (root?.children ?? [])
    .map((child) => child.name)
    .filter((name): name is string => typeof name === 'string');
  if (names.length === 0) {
    throw new ArtifactError(`${runDir}: blueprint root lists no subtasks`);
  }
  return names;
}

function readText(path: string): string {
  try {
    return readFileSync(path, 'utf-8');
  } catch (err) {
    throw new ArtifactError(`cannot read ${path}: ${(err as Error).message}`);
  }
}

function parseJson(path: string): Record<string, unknown> {
  const text = readText(path);
  try {
    return JSON.parse(text) as Record<string, unknown>;
  } catch (err) {
    throw new ArtifactError(`${path}: invalid JSON: ${(err as Error).message}`);
  }
}
