export {
  ArtifactError,
  loadCsv,
  loadJson,
  loadReport,
  loadPlanTrace,
  loadExecution,
  listSubtasks,
  numericColumn,
  stringColumn,
  TRACE_SCHEMA,
  EXECUTION_SCHEMA,
  PLAN_SCHEMA,
  BLUEPRINT_SCHEMA,
  EVALUATION_SCHEMA,
} from './artifacts.js';
export { parseWindow, parseSpheres, parseBounds } from './constraint.js';
export {
  trajectory2d,
  trajectory3d,
  channelVsTime,
  objectiveHistory,
  btTimeline,
} from './plots.js';
export { render, PLOT_KINDS, type PlotKind, type RenderOptions } from './render.js';
