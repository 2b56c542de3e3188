from .attention import AttentionBlock
from .backbone import ASPP, FeaturePyramid, ToyBackbone
from .fbam import ABLATION_MODES, FBAM, FbamOutput
from .iebam import IEBAM, IebamOutput
from .network import BACKBONES, GlassNet, ModelConfig

__all__ = [
    "ABLATION_MODES", "ASPP", "AttentionBlock", "BACKBONES", "FBAM", "FbamOutput",
    "FeaturePyramid", "GlassNet", "IEBAM", "IebamOutput", "ModelConfig", "ToyBackbone",
]
