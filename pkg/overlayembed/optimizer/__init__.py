from overlayembed.optimizer.adam import AdamState, adam_step, init_embedding
from overlayembed.optimizer.training import TrainConfig, TrainResult, train, save_trace, evaluate_metric
