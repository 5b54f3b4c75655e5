"""Randomized sketching for subspace embeddings, leverage-score sampling,
independent row selection and least squares."""
from .basis import (BasisResult, grow_basis, independent_subset, orthogonal_complement,
                    rank_preserving_sketch, select_independent_rows)
from .embed import EmbedConfig, EmbedResult, constant_embed, polylog_embed, rank_adaptive_dims
from .errors import (BasisError, LengthError, MatrixMarketError, RankDeficientError,
                     ShapeError, SketchError, SparsityError)
from .leverage import (LevSampleConfig, SampledRows, amm_sample, eps_subspace_embed,
                       qr_lev_factors, two_stage_sample)
from .linalg import (distortion, exact_leverage_scores, matmul, numerical_rank,
                     pseudo_inverse_apply, qr_preconditioner, spectral_norm, svd_thin)
from .mmio import read_matrix_market, write_matrix_market
from .regression import exact_lsq_oracle, gd_lsq, solve_regression
from .report import RunReport
from .sdp import (PackingInstance, WeightVector, build_packing_instance, solve_packing_sdp,
                  verify_weights)
from .sketch import (Composite, DiagonalWeights, Osnap, StackedSrht, UniformSample,
                     apply_sketch, fwht, osnap_build, srht_build, uniform_sample_build)

__version__ = "0.1.0"
