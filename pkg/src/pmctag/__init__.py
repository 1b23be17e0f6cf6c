"""Sequence labeling with hidden and pairwise Markov chains."""

from .conll import (LabeledCorpus, apply_mapping, mark_known, read_conll,
                    read_records, read_tag_mapping, write_conll)
from .errors import (CorruptModel, DeadEnd, EmptyCorpus, EmptySentence,
                     EmptySupport, EmptyToken, FormatError, PmctagError,
                     ShapeError, UnknownTag, UnsupportedVersion)
from .evaluation import (EvalReport, Span, benchmark, evaluate_predictions,
                         extract_spans, span_f1, token_accuracy)
from .features import (FeatureEmissionTables, WordFeatures, extract_features,
                       feature_emission_prob, fit_feature_tables)
from .inference import (FactorProvider, backward, decode_map, decode_mpm,
                        decode_sentence, forward, posterior_marginals,
                        resolve_factors)
from .model import (CountTables, HmcParams, Interner, ModelBundle, PmcParams,
                    normalize_counts)
from .oracle import TinyInstance, embed_hmc_as_pmc, enumerate_map, enumerate_posteriors
from .serialize import (deserialize_model, load_model, model_stats, save_model,
                        serialize_model)
from .training import (TrainConfig, accumulate_counts, fit_hmc, fit_pmc,
                       train_model, update_online)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
