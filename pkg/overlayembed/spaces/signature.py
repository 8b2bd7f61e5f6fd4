# -*- coding: utf-8 -*-

__author__ = 'Overlayembed developers'

# Native Python packages
import warnings
from dataclasses import dataclass

# Project imports
from overlayembed.exceptions import SignatureSyntaxError, DimensionMismatchError, ConfigurationError
from overlayembed.geometry.maps import EUCLIDEAN, SPHERICAL, SPACE_KINDS

SINGLE = 'single'
PRODUCT = 'product'
OVERLAY = 'overlay'
DOT = 'dot'
EXPDOT = 'expdot'

STORED_CONVENTION = 'stored'
AMBIENT_CONVENTION = 'ambient'
SPHERE_CONVENTIONS = (STORED_CONVENTION, AMBIENT_CONVENTION)

AGGREGATIONS = ('l0', 'l1', 'l2')


@dataclass(frozen=True)
class Factor:
    """
    One factor of a product signature

    ``dim`` is the manifold dimension as written in the signature, ``start``/``stop`` delimit the
    ambient coordinates the factor reads (zero-based, stop exclusive).
    """
    kind: str
    dim: int
    start: int
    stop: int

    @property
    def ambient(self):
        return self.stop - self.start

    def label(self):
        return "%s%i" % (self.kind, self.dim)


@dataclass(frozen=True)
class OverlayTerm:
    """
    One weighted term of the universal overlaying signature
    """
    layer: int
    subset: int
    kind: str
    start: int
    stop: int


@dataclass(frozen=True)
class Signature:
    """
    Parsed space specification

    ``variant`` is one of ``single``, ``product``, ``overlay``, ``dot`` and ``expdot``. Product and single
    signatures carry their ``factors``; overlaying signatures their ``depth`` and ``aggregation``.
    """
    variant: str
    ambient_dim: int
    text: str
    factors: tuple = ()
    depth: int = 0
    aggregation: str = 'l2'
    sphere_convention: str = STORED_CONVENTION

    @property
    def is_metric(self):
        return self.variant not in (DOT, EXPDOT)

    def canonical_text(self):
        """
        Signature text that parses back to this signature (carries the sphere convention when needed)
        """
        if self.sphere_convention == AMBIENT_CONVENTION and any(f.kind == SPHERICAL for f in self.factors):
            return "%s;%s" % (self.text, AMBIENT_CONVENTION)
        return self.text

    def overlay_terms(self):
        """
        Enumerates the overlay terms in parameter order: layer, then subset, then space (E, S, H)

        :return: List of ``OverlayTerm``
        """
        terms = []
        for layer, subset, start, stop in overlay_subsets(self.ambient_dim, self.depth):
            for kind in SPACE_KINDS:
                terms.append(OverlayTerm(layer=layer, subset=subset, kind=kind, start=start, stop=stop))
        return terms


def overlay_subsets(d, depth):
    """
    Returns the dyadic coordinate subsets of the universal signature

    Layer ``l`` holds ``2^l`` contiguous subsets; subset ``i`` (one-based) covers the coordinates
    ``floor(d (i-1) / 2^l) + 1 .. floor(d i / 2^l)``. The returned bounds are zero-based, stop exclusive.

    :param d: Ambient dimension
    :param depth: Depth ``t`` of the signature
    :return: List of tuples ``(layer, subset, start, stop)``
    """
    subsets = []
    for layer in range(depth + 1):
        parts = 2 ** layer
        for i in range(1, parts + 1):
            subsets.append((layer, i, (d * (i - 1)) // parts, (d * i) // parts))
    return subsets


class _Scanner(object):
    """
    Character scanner for the signature grammar with positioned error reporting
    """

    def __init__(self, text):
        self.text = text
        self.upper = text.upper()
        self.pos = 0

    def error(self, message):
        raise SignatureSyntaxError(message, self.text, self.pos)

    def peek(self):
        return self.upper[self.pos] if self.pos < len(self.upper) else ''

    def accept(self, literal):
        if self.upper.startswith(literal, self.pos):
            self.pos += len(literal)
            return True
        return False

    def expect(self, literal):
        if not self.accept(literal):
            self.error("Expected '%s'" % literal)

    def integer(self):
        start = self.pos
        while self.peek().isdigit():
            self.pos += 1
        if start == self.pos:
            self.error("Expected an integer")
        return int(self.upper[start:self.pos])

    def at_end(self):
        return self.pos == len(self.upper)


def _parse_product(scanner):
    """
    product := power ("x" power)* ; power := ("E"|"H"|"S") INT ("^" INT)?
    """
    parts = []
    while True:
        kind = scanner.peek()
        if kind not in SPACE_KINDS:
            scanner.error("Expected a space kind E, H or S")
        scanner.pos += 1
        dim_pos = scanner.pos
        dim = scanner.integer()
        repeat = 1
        if scanner.accept('^'):
            repeat_pos = scanner.pos
            repeat = scanner.integer()
            if repeat < 1:
                scanner.pos = repeat_pos
                scanner.error("Power must be at least 1")
        parts.append((kind, dim, repeat, dim_pos))
        if scanner.at_end():
            return parts
        if not scanner.accept('X'):
            scanner.error("Expected 'x' or end of signature")


def _ambient_size(kind, dim, convention):
    if kind == SPHERICAL and convention == STORED_CONVENTION:
        return dim + 1
    return dim


def parse_signature(text, d, sphere_convention=STORED_CONVENTION):
    """
    Parses and validates a signature string against the ambient dimension

    Grammar (case-insensitive)::

        single   := ("E"|"H"|"S") INT
        product  := single ("^" INT)? ("x" single ("^" INT)?)*
        overlay  := "OL" ("0"|"1"|"2") ":t=" INT
        dot      := "DOT" | "EXPDOT"
        suffix   := ";stored" | ";ambient"

    Under the ``stored`` convention a spherical factor ``S_k`` occupies ``k + 1`` ambient coordinates,
    under the ``ambient`` convention it occupies ``k`` coordinates.

    :param text: Signature text, e.g. ``"H5xS4"``, ``"E10"``, ``"H2^5"``, ``"OL1:t=1"``, ``"DOT"``
    :param d: Ambient dimension of the run
    :param sphere_convention: ``stored`` (default) or ``ambient``; a suffix in the text takes precedence

    :return: Signature instance
    """
    if d < 1:
        raise DimensionMismatchError("Ambient dimension must be positive, got %s" % d)
    body = text.strip()
    if ';' in body:
        body, suffix = body.split(';', 1)
        sphere_convention = suffix.strip().lower()
        body = body.strip()
    if sphere_convention not in SPHERE_CONVENTIONS:
        raise ConfigurationError("Unknown sphere convention '%s', expected one of %s" % (
            sphere_convention, SPHERE_CONVENTIONS))
    if not body:
        raise SignatureSyntaxError("Empty signature", text, 0)

    upper = body.upper()
    if upper in ('DOT', 'EXPDOT'):
        return Signature(variant=DOT if upper == 'DOT' else EXPDOT, ambient_dim=d, text=upper,
                         sphere_convention=sphere_convention)

    scanner = _Scanner(body)
    if upper.startswith('OL'):
        scanner.pos = 2
        level = scanner.peek()
        if level not in ('0', '1', '2'):
            scanner.error("Expected aggregation 0, 1 or 2 after 'OL'")
        scanner.pos += 1
        scanner.expect(':T=')
        depth = scanner.integer()
        if not scanner.at_end():
            scanner.error("Unexpected trailing characters")
        if 2 ** depth > d:
            raise DimensionMismatchError(
                "Depth t=%i needs at least %i ambient coordinates, got d=%i" % (depth, 2 ** depth, d))
        if min(stop - start for _, _, start, stop in overlay_subsets(d, depth)) < 2:
            warnings.warn("Signature %s uses one-coordinate subsets; their spherical terms are degenerate (S_0)"
                          % body)
        return Signature(variant=OVERLAY, ambient_dim=d, text="OL%s:t=%i" % (level, depth), depth=depth,
                         aggregation='l%s' % level, sphere_convention=sphere_convention)

    factors = []
    offset = 0
    labels = []
    for kind, dim, repeat, dim_pos in _parse_product(scanner):
        ambient = _ambient_size(kind, dim, sphere_convention)
        if dim < 1:
            scanner.pos = dim_pos
            if kind == SPHERICAL and sphere_convention == STORED_CONVENTION:
                scanner.error("Spherical factor needs at least 2 stored values")
            scanner.error("Factor dimension must be at least 1")
        if kind == SPHERICAL and ambient < 2:
            warnings.warn("Spherical factor S%i with one ambient coordinate is degenerate (S_0)" % dim)
        for _ in range(repeat):
            factors.append(Factor(kind=kind, dim=dim, start=offset, stop=offset + ambient))
            offset += ambient
        labels.append("%s%i%s" % (kind, dim, "^%i" % repeat if repeat > 1 else ""))
    if offset != d:
        raise DimensionMismatchError(
            "Signature %s occupies %i ambient coordinates (%s convention) but d=%i" % (
                body, offset, sphere_convention, d))
    variant = SINGLE if len(factors) == 1 else PRODUCT
    return Signature(variant=variant, ambient_dim=d, text="x".join(labels), factors=tuple(factors),
                     sphere_convention=sphere_convention)


def weight_count(signature):
    """
    Number of trainable scalar parameters of a signature

    Overlaying signatures have ``3 (2^(t+1) - 1)`` weights, product and single signatures one weight per
    non-Euclidean factor and the dot similarities the single offset ``c``.

    :param signature: Signature instance
    :return: Integer count
    """
    if signature.variant == OVERLAY:
        return 3 * (2 ** (signature.depth + 1) - 1)
    if signature.variant in (DOT, EXPDOT):
        return 1
    return sum(1 for factor in signature.factors if factor.kind != EUCLIDEAN)
