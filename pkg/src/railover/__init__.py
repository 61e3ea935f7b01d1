"""Detection of rail driving-over events from accelerometer time series."""

from .dsp import (BandPlan, FeatureFrame, Waveform, featurize, frame_windows,
                  integrate_to_velocity, low_pass, octave_spectrum,
                  peak_to_peak, rms)
from .synth import (Confounder, LabeledRecording, Material, ScenarioConfig,
                    SensorProfile, generate_dataset, generate_event,
                    generate_regular)
from .classical import (SaParams, ThresholdModel, classify_segment,
                        classify_window, reduce_quantities, train_thresholds,
                        weighted_loss)
from .cnn import (CnnModel, SegmentTensor, TrainConfig, cross_entropy,
                  forward, predict)
from .dataset import LabeledSegment, derive_seed, load_segments
from .evaluation import EvalResult, SplitSpec, evaluate, report, split, summarize
from .pipeline import run_pipeline

__version__ = "0.1.0"
