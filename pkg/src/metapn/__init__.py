"""Few-shot semi-supervised node classification with a meta-learned label
propagator and a decoupled MLP target model."""

from .sparse import CsrMatrix, from_edge_list, spmm, sym_normalize_with_self_loops
from .propagation import (PropagationTrace, PropagatorParams, PprConfig,
                          adaptive_propagate, attention_weights,
                          init_propagator_params, power_iterate, ppr_iterate,
                          propagator_grad, reachable_nodes, seed_labels)
from .neural import (AdamState, DropoutMask, MlpParams, adam_init, adam_step,
                     backward, forward, init_mlp, soft_cross_entropy)
from .meta import MetaState, TrainConfig, hypergradient, train
from .data import (GraphBundle, SbmSpec, SplitSpec, generate_sbm, load_bundle,
                   sample_kshot_split, store_bundle)

__version__ = "0.1.0"
