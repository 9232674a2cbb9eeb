class WalkError(ValueError):
    """Base class for errors raised by metropolis_ustcon"""


class InvalidNodeError(WalkError):
    """A node id, port or split copy index is out of range"""


class GraphFormatError(WalkError):
    """An edge-list file or generator spec could not be parsed"""


class InfeasibleParameterError(WalkError):
    """Parameters describe an object that cannot exist"""


class CapacityError(WalkError):
    """A dense or materialised object would exceed its configured cap"""


class UnknownElementError(WalkError):
    """A disjoint-set operation named an element that was never registered"""
