"""Session ingestion, windowing, impostor pairing and synthetic corpora."""

from .sessions import (
    N_FEATURES,
    N_TIMESTAMPS,
    SAMPLE_INTERVAL_MS,
    Session,
    SessionFormat,
    group_sessions,
    load_sessions,
    read_manifest,
    read_session,
    save_sessions,
    session_path,
    write_session,
)
from .synthetic import SyntheticUserParams, generate_synthetic_dataset, random_user_params
from .windows import (
    GENUINE,
    IMPOSTOR,
    DatasetSplit,
    LabeledWindow,
    WindowSpec,
    build_split,
    genuine_windows,
    labels_of,
    sample_impostors,
    slide_windows,
    stack_values,
    window_count,
)
