from .stn import SpatialTransformer, affine_warp, IDENTITY_THETA
from .backbones import ConvEncoder, Predictor, init_from_stream
from .siamese import FeaturePair, SiameseModel, SiameseOutputs, registration_loss
from .masking import (
    apply_mask_token,
    complementary_mask_grids,
    mask_features,
    select_mask_grid,
)
from .decoder import AttentionBlock, FeatureDecoder
from .recon import MaskedReconModel, ReconOutputs, reconstruction_loss
from .discriminator import Discriminator

__all__ = [
    "SpatialTransformer",
    "affine_warp",
    "IDENTITY_THETA",
    "ConvEncoder",
    "Predictor",
    "init_from_stream",
    "FeaturePair",
    "SiameseModel",
    "SiameseOutputs",
    "registration_loss",
    "apply_mask_token",
    "complementary_mask_grids",
    "mask_features",
    "select_mask_grid",
    "AttentionBlock",
    "FeatureDecoder",
    "MaskedReconModel",
    "ReconOutputs",
    "reconstruction_loss",
    "Discriminator",
]
