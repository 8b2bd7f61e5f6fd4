from overlayembed.geometry.maps import map_spherical, map_hyperbolic, lorentz_inner, dist_euclidean, \
    dist_spherical, dist_hyperbolic, grad_distance, distance_and_gradient, base_distance, \
    is_on_hyperboloid, EUCLIDEAN, SPHERICAL, HYPERBOLIC, SPACE_KINDS
