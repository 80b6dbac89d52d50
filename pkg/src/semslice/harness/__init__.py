from .config import (AGENT_KINDS, PRESETS, ExperimentConfig, load_config, load_preset, standard_slices,
                     parse_config, preset_path)
from .io import (ExportError, csv_header, emit_plot_data, export, import_log, load_checkpoint,
                 plot_series, read_csv, recompute_aggregates, save_checkpoint, write_csv)
from .runner import MetricsLog, aggregate, build_agent, run_experiment, substream
from .stats import ComparisonReport, compare, compare_values, seed_metric

__all__ = [
    "AGENT_KINDS", "PRESETS", "ComparisonReport", "ExperimentConfig", "ExportError", "MetricsLog",
    "aggregate", "build_agent", "compare", "compare_values", "csv_header", "emit_plot_data", "export",
    "import_log", "load_checkpoint", "load_config", "load_preset", "standard_slices", "parse_config",
    "plot_series", "preset_path", "read_csv", "recompute_aggregates", "run_experiment",
    "save_checkpoint", "seed_metric", "substream", "write_csv",
]
