from typing import Dict, List

from .base import LossInputs, LossStrategy
from .combined import SiNetLoss, SsiNetLoss, si_net_loss, ssi_net_loss
from .gradcheck import check_parameter_gradients, gradient_check
from .gradient import GradientMatchingLoss, L1DepthLoss, l1_depth_loss, multiscale_gradient_loss
from .normals import NormalsCosineLoss, NormalsGradientLoss, normal_gradient_sse, normals_cosine_loss, \
    normals_gradient_loss
from .ordinal import RankingLoss, SparseOrdinalLoss, ordinal_pair_loss, ordinal_pair_terms, ranking_loss, \
    ranking_pair_terms, sparse_ordinal_loss
from .ssi import SsiLoss, ssi_loss
from ..errors import InvalidArgumentError


def load_losses() -> List[LossStrategy]:
    return [
        SsiLoss(),
        SparseOrdinalLoss(),
        RankingLoss(),
        GradientMatchingLoss(),
        L1DepthLoss(),
        NormalsCosineLoss(),
        NormalsGradientLoss(),
        SsiNetLoss(),
        SiNetLoss(),
    ]


def loss_names() -> List[str]:
    return [s.label() for s in load_losses()]


def get_loss(name: str) -> LossStrategy:
    by_label: Dict[str, LossStrategy] = {s.label(): s for s in load_losses()}
    try:
        return by_label[name]
    except KeyError:
        raise InvalidArgumentError(f"unknown loss {name!r} (expected one of {', '.join(by_label)})")
