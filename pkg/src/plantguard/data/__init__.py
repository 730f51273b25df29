from plantguard.data.records import (
    DatasetProfile,
    RecordSet,
    SampleRecord,
    load_csv,
    load_manifest,
    save_csv,
    save_manifest,
)
from plantguard.data.normalize import Normalizer, fit_normalizer
from plantguard.data.windows import make_windows
from plantguard.data.noise import NoiseConfig, add_gaussian_noise
from plantguard.data.profiles import builtin_profile, swat_profile, synthetic_profile, wadi_profile

__all__ = [
    "SampleRecord", "RecordSet", "DatasetProfile", "load_csv", "save_csv",
    "save_manifest", "load_manifest", "Normalizer", "fit_normalizer",
    "make_windows", "NoiseConfig", "add_gaussian_noise",
    "builtin_profile", "swat_profile", "wadi_profile", "synthetic_profile",
]
