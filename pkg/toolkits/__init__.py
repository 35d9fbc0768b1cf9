from .csv_io import emit_report, load_csv, read_changes, read_matrix, write_changes, write_matrix

__all__ = [
    "load_csv",
    "emit_report",
    "read_changes",
    "read_matrix",
    "write_changes",
    "write_matrix",
]
