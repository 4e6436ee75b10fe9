from .autoencoder import (AEModel, ae_forward, ae_gradients, ae_loss, ae_train, init_ae,
                          symmetric_dims)
from .pca import PCAModel, pca_fit, pca_inverse, pca_transform
from .pipeline import (PCAStage, ReductionPipeline, compose_pipeline, flatten_frame,
                       flatten_frames, format_ratio, unflatten_frames)
from .scaling import ScalerModel, fit_scaler
