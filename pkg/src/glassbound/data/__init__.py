from .dataset import (
    AugmentSpec, BandSpec, GlassDataset, RawItem, Sample, SplitListing, augment,
    load_dataset, make_sample, resize, write_dataset,
)
from .synth import KINDS, Fixture, render_fixture, synth_fixture, synth_set

__all__ = [
    "AugmentSpec", "BandSpec", "Fixture", "GlassDataset", "KINDS", "RawItem", "Sample",
    "SplitListing", "augment", "load_dataset", "make_sample", "render_fixture", "resize",
    "synth_fixture", "synth_set", "write_dataset",
]
