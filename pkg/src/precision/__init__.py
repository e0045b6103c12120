from .formats import (
    FormatInfo,
    PrecisionFormat,
    format_info,
    quantize,
    quantize_vector,
)

__all__ = [
    "FormatInfo",
    "PrecisionFormat",
    "format_info",
    "quantize",
    "quantize_vector",
]
