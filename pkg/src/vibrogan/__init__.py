"""1-D WGAN-GP acceleration-window augmentation and DCNN damage detection."""

from .signal_core import (AccelRecord, Window, ScenarioSpec, SurrogateParams,
                          default_scenarios, segment_record, normalize_windows,
                          shuffle_partition, assemble_scenario,
                          generate_surrogate_record, load_record, save_record,
                          load_windows, save_windows)
from .gan import (GanConfig, TrainLog, build_gan_models, gradient_penalty,
                  critic_loss, generator_loss, train_gan, generate)
from .classifier import (ClassifierConfig, build_classifier, train_classifier,
                         predict, default_learning_rate)
from .metrics import PredictionSet, mae, classification_accuracy, average_precision
from .gan_eval import (GaussianSummary, SsimParams, gaussian_summary, fid, ssim,
                       creativity_scores, diversity_scores, fid_scores,
                       pdf_estimate, boxplot_stats)
from .layers import (LayerSpec, NetworkSpec, ParamStore, forward, init_params,
                     save_checkpoint, load_checkpoint)
from .optim import AdamW

__version__ = "0.1.0"
