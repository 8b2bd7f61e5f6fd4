# -*- coding: utf-8 -*-

"""
Exception hierarchy for the embedding engine.

All errors derive from built-in exception types (``ValueError``, ``ArithmeticError``) so that callers
catching those keep working. Each error carries the exit code used by the command-line interface.
"""

__author__ = 'Overlayembed developers'


class OverlayEmbedError(Exception):
    """
    Base class for all errors raised by the package
    """
    exit_code = 1


class ConfigurationError(OverlayEmbedError, ValueError):
    """
    Invalid run configuration, signature or option combination
    """
    exit_code = 2


class SignatureSyntaxError(ConfigurationError):
    """
    Signature text does not conform to the grammar

    :param message: Description of the problem
    :param text: The offending signature text
    :param position: Zero-based character position where parsing failed
    """

    def __init__(self, message, text, position):
        self.text = text
        self.position = position
        super(SignatureSyntaxError, self).__init__(
            "%s at position %i in '%s'" % (message, position, text))


class DimensionMismatchError(ConfigurationError):
    """
    Dimensions of a signature or of two vectors do not agree
    """


class DataError(OverlayEmbedError, ValueError):
    """
    Invalid input data (edge lists, caches, graphs)
    """
    exit_code = 3


class EdgeListFormatError(DataError):
    """
    A line of an edge list could not be parsed

    :param message: Description of the problem
    :param line_number: One-based line number in the file, None for edges not read from a file
    """

    def __init__(self, message, line_number=None):
        self.line_number = line_number
        if line_number is not None:
            message = "Line %i: %s" % (line_number, message)
        super(EdgeListFormatError, self).__init__(message)



class SelfLoopError(EdgeListFormatError):
    pass


class NonPositiveWeightError(EdgeListFormatError):
    pass


class DuplicateEdgeError(EdgeListFormatError):
    pass


class DisconnectedGraphError(DataError):
    pass


class EmptyGraphError(DataError):
    pass


class IsolatedNodeError(DataError):
    pass


class CacheFormatError(DataError):
    """
    Binary cache or embedding dump has an unexpected layout
    """


class NumericalError(OverlayEmbedError, ArithmeticError):
    """
    Numerical failure during evaluation or training
    """
    exit_code = 4


class ZeroVectorError(NumericalError):
    """
    A zero vector was projected onto the sphere
    """


class DomainError(NumericalError):
    """
    A value lies outside the domain of a conversion function
    """


class DivergenceError(NumericalError):
    """
    Loss or gradient became non-finite during training

    :param message: Description of the problem
    :param iteration: Iteration at which the problem was detected
    :param block: Name of the parameter block (``embedding``, ``weights`` or ``offset``), if known
    :param max_abs_gradient: Largest finite absolute gradient entry in the offending block, if known
    """

    def __init__(self, message, iteration=None, block=None, max_abs_gradient=None):
        self.iteration = iteration
        self.block = block
        self.max_abs_gradient = max_abs_gradient
        details = []
        if iteration is not None:
            details.append("iteration=%i" % iteration)
        if block is not None:
            details.append("block=%s" % block)
        if max_abs_gradient is not None:
            details.append("max|g|=%.3e" % max_abs_gradient)
        if details:
            message = "%s (%s)" % (message, ", ".join(details))
        super(DivergenceError, self).__init__(message)
