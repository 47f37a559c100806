import numpy as np

# Shared helpers: error types, seeded generators and small parsing utilities


class EquirouteError(Exception):
    pass


class TableError(EquirouteError, ValueError):
    pass


class ConfigError(EquirouteError, ValueError):
    pass


class NumericsError(EquirouteError, ArithmeticError):
    pass


class ThresholdError(EquirouteError):
    pass


# Philox-4x64 is counter based; the 128-bit key packs (stream, seed) so every stream is
# independent and a (seed, stream) pair always yields the same draws.
def make_rng(seed, stream = 0):
    key = (int(stream) << 64) | (int(seed) & 0xFFFFFFFFFFFFFFFF)
    return np.random.Generator(np.random.Philox(key = key))


# Standard normal draws use numpy's ziggurat sampler on top of the Philox stream
def gaussian(seed, shape, stream = 0):
    return make_rng(seed, stream).standard_normal(shape)


def glorot_uniform(rng, fan_out, fan_in):
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=(fan_out, fan_in))


def parse_list(fields_str, cast = str):
    fields = [x.strip() for x in fields_str.split(',')] if len(fields_str.strip()) > 0 else [] # trim spaces
    return [cast(x) for x in fields if len(x) > 0]


def parse_ratio(ratio_str):
    parts = [x.strip() for x in ratio_str.replace(',', ':').split(':')]
    try:
        return tuple(float(x) for x in parts)
    except ValueError:
        raise ConfigError(f"invalid split ratio '{ratio_str}'")


def format_float(value):
    # repr is the shortest string that parses back to the same double
    return repr(float(value))
