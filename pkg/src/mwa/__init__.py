"""Word-aligned self-attention with multi-source segmentation fusion.

A desk-scale, from-scratch implementation: character-level attention scores
pooled to word granularity with a trainable max/mean balance, upsampled back
to character positions, multi-headed, and fused across several word
segmentation sources. Includes dictionary segmenters, a tape-based autodiff
kernel with a finite-difference verifier, a toy training harness, and a CLI.
"""

from .attention import (
    AlignedAttention,
    AttentionHeadParams,
    MWALayerParams,
    align,
    char_attention_scores,
    head_output,
    mixed_pool,
    multi_head,
    partition_rows,
    upsample,
)
from .errors import (
    AlignmentError,
    ConfigError,
    DeterminismError,
    InputError,
    MwaError,
    ShapeError,
    TapeError,
)
from .estimator import MWAClassifier
from .fusion import FusionParams, MWAModel, fuse, mwa_forward
from .gradcheck import finite_diff_check, finite_diff_report
from .matrix import (
    Matrix,
    Parameter,
    add,
    concat_columns,
    concat_rows,
    logistic_map,
    matmul,
    scale,
    softmax_rows,
    tanh_map,
    transpose,
    zero_grads,
)
from .model import (
    ClassifierHead,
    EncoderParams,
    FullModel,
    ModelConfig,
    encode,
    init_check_model,
    init_model,
    predict_logits,
    sinusoidal_positions,
)
from .optim import AdamState, adam_step, effective_lr
from .segmentation import (
    BmmSegmenter,
    CharSequence,
    ExternalSegmenter,
    FmmSegmenter,
    Lexicon,
    RandomSegmenter,
    SingletonSegmenter,
    WordPartition,
    bmm_segment,
    fmm_segment,
    load_dictionary,
    load_external_segmentations,
    partition_from_words,
    random_segment,
    singleton_partition,
    validate_partition,
)
from .tape import Node, Tape

__version__ = "0.1.0"
