"""Forward error correction and soft bit processing."""
from .interleaver import Interleaver, build_interleaver
from .ira import IraCodeSpec, RepIraCode, ira_decode_siso, ira_encode
from .repetition import RepetitionCode, SisoOutput, rep_decode_hard, rep_decode_siso, rep_encode
from .soft import LLR_MAX, clamp_llr, soft_demap, soft_map


def make_code(name: str, info_len: int = 410):
    """``rep10`` (rate-0.1 repetition, any K) or ``rep_ira`` (K=410, n=4096)."""
    if name == "rep10":
        return RepetitionCode(info_len, 10)
    if name == "rep_ira":
        spec = IraCodeSpec()
        if info_len != spec.info_len:
            raise ValueError(f"rep_ira is defined for K={spec.info_len}, got {info_len}")
        return RepIraCode(spec)
    raise ValueError(f"unknown code {name!r}; expected rep10 or rep_ira")


__all__ = [
    "Interleaver", "build_interleaver", "IraCodeSpec", "RepIraCode", "ira_encode",
    "ira_decode_siso", "RepetitionCode", "SisoOutput", "rep_encode", "rep_decode_siso",
    "rep_decode_hard", "LLR_MAX", "clamp_llr", "soft_demap", "soft_map", "make_code",
]
