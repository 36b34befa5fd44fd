from mocha_attention.transducer.decode import AlignmentTrace, Transduction, greedy_transduce
from mocha_attention.transducer.model import MECHANISMS, ModelConfig, Transducer
from mocha_attention.transducer.tasks import TaskSpec, collate, make_dataset
from mocha_attention.transducer.train import (
    TrainConfig,
    TrainingDiverged,
    TrainResult,
    load_run,
    save_run,
    sequence_accuracy,
    teacher_forced_accuracy,
    train,
)
