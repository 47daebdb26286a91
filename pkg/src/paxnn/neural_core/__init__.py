"""From-scratch numerical kernels: dense and LSTM layers, losses,
backpropagation (through time), SGDM, initialization, gradient checking,
and the text parameter format. Hot paths are backend-switched between
numba and pure numpy, see :mod:`paxnn.neural_core.backend`.
"""

from . import backend
from .gradcheck import GradCheckReport, grad_check
from .losses import (combined_loss_and_grads, combined_logits_from_states,
                     combined_static_hidden, fnn_logits, fnn_loss_and_grads,
                     lstm_cell_batch, lstm_hidden_states, lstm_loss_and_grads,
                     lstm_readout)
from .ops import cross_entropy, dense_forward, lstm_step, sigmoid, softmax
from .optim import SgdmState, sgdm_update
from .params import (DenseParams, LstmParams, LstmState, clone_params,
                     init_combined, init_dense, init_fnn, init_lstm)
from .serialize import dumps_params, loads_params, read_params, write_params

__all__ = [
    "backend", "GradCheckReport", "grad_check",
    "combined_loss_and_grads", "combined_logits_from_states",
    "combined_static_hidden", "fnn_logits", "fnn_loss_and_grads",
    "lstm_cell_batch", "lstm_hidden_states", "lstm_loss_and_grads",
    "lstm_readout", "cross_entropy", "dense_forward", "lstm_step", "sigmoid",
    "softmax", "SgdmState", "sgdm_update", "DenseParams", "LstmParams",
    "LstmState", "clone_params", "init_combined", "init_dense", "init_fnn",
    "init_lstm", "dumps_params", "loads_params", "read_params", "write_params",
]
