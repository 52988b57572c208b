"""Numerical exploration of homogeneous self-similar measures.

Certified dyadic histograms, L^q and entropy dimension estimation,
Fourier transform evaluation with decay fitting, projection and
convolution and digit-split constructions, and exceptional-parameter
scanning, with a CSV-emitting command line on top.
"""

from .dimension import (AcDecision, ContinuityReport, DimEstimate,
                        MomentTable, SubmultReport, ac_predicate,
                        build_moment_table, check_submultiplicativity,
                        closed_form_Dq, continuity_check_at_1, estimate_D1,
                        estimate_Dq, table_from_histograms)
from .ekscan import (EkCountReport, EkReport, EkSpec, centered_frac,
                     ek_badness, ek_count_sequences, ek_sweep)
from .errors import (BudgetError, InvalidWordError, PrecisionError,
                     SelfsimError, SpecError, UsageError)
from .fourier import (ConvolvedMeasure, FourierProfile, IfsMeasure,
                      ProjectedMeasure, ScaledMeasure, decay_fit, ft_eval,
                      ft_projected_eval)
from .histogram import (DyadicHistogram, dyadic_depth, entropy_sum, histogram,
                        moment_sums)
from .ifs import (WORD_BUDGET, HomogeneousIfs, SeparationCertificate,
                  Similarity, check_strong_separation, check_weights,
                  coding_map_partial, cylinder_ball, cylinder_centers,
                  entropy, ifs_from_json, ifs_to_json, similarity_dimension,
                  uniform_weights, unrank_word, word_weights)
from .transforms import (ResolvedMeasure, SkipKeepPair, convolve_hist,
                         histogram_project, iterate_ifs, load_measure_spec,
                         measure_histogram, measure_spectral, product_ifs,
                         project_ifs, resolve_spec, skip_keep)

__version__ = "0.1.0"
