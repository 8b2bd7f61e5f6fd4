from overlayembed.losses.objectives import LossSpec, convert, log_score, distortion_loss, proxy_loss, \
    distortion_pairs, sample_pairs, loss_and_gradient, DISTORTION, PROXY, CONVERSIONS, READINGS, DEFAULT_D0
