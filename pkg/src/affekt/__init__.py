"""EEG emotion recognition pipeline.

Signal cleanup (Butterworth band-stop, standard score), disorder simulation
with entropy validation, Welch PSD feature matrices, a from-scratch CNN with
exact gradients, and a streaming intervention mode, all behind one CLI.
"""

from .dataset import (
    BINARY_CLASS_NAMES,
    BinaryClass,
    ClassLabel,
    EmotionEvent,
    EmotionTable,
    LabeledWindow,
    SmoteSpec,
    extract_windows,
    label_from_ratings,
    load_recording,
    make_batches,
    smote_resample,
    split_and_batch,
    split_windows,
)
from .entropy import (
    ChannelShift,
    EntropyParams,
    EntropyProfile,
    NoiseSpec,
    add_gaussian_noise,
    coarse_grain,
    complexity_shift_report,
    multiscale_entropy,
    sample_entropy,
    sample_entropy_abs,
    template_match_counts,
)
from .features import (
    FeatureMatrix,
    PsdSpec,
    build_feature_matrix,
    psd_feature_values,
    read_feature_file,
    welch_psd,
    write_feature_file,
)
from .nn import BlockSpec, CnnConfig, backward, cross_entropy, forward, init_params, softmax
from .signals import (
    FilterKind,
    FilterRealization,
    FilterSpec,
    Recording,
    analog_butterworth_gain,
    apply_filter,
    design_filter,
    powerline_notch,
    zscore,
)
from .stream import STRATEGIES, InterventionEvent, StreamSpec, stream_classify
from .synth import synth_generate
from .training import (
    AdamState,
    Metrics,
    TrainConfig,
    TrainResult,
    adam_init,
    adam_step,
    evaluate,
    lr_at,
    train,
)

__version__ = "0.1.0"
