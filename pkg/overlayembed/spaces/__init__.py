from overlayembed.spaces.signature import Signature, Factor, OverlayTerm, parse_signature, weight_count, \
    overlay_subsets, SINGLE, PRODUCT, OVERLAY, DOT, EXPDOT, STORED_CONVENTION, AMBIENT_CONVENTION
from overlayembed.spaces.models import ParamLayout, EmbeddingState, DistanceModel, ProductModel, OverlayModel, \
    DotModel, build_model, product_distance, overlay_distance, dot_distance
