from dotenv import dotenv_values

from shock_ad.core.errors import ConfigError


class Settings:
    # Gas model
    GAMMA = 1.4

    # Burgers ramp grid table, rows 1..9: (cell width, fixed time step)
    BURGERS_TABLE = {
        1: (5.75e-5, 3.64e-5),
        2: (1.15e-4, 7.27e-5),
        3: (2.3e-4, 1.45e-4),
        4: (4.6e-4, 2.9e-4),
        5: (9.2e-4, 5.88e-4),
        6: (1.84e-3, 1.18e-3),
        7: (3.68e-3, 2.35e-3),
        8: (7.36e-3, 4.7e-3),
        9: (1.472e-2, 9.52e-3),
    }
    BURGERS_RAMP_SHIFT = 0.05
    BURGERS_DOMAIN_LENGTH = 1.9
    BURGERS_T_FINAL = 2.0
    BURGERS_CFL = 0.63
    # "lxf" smears the shock over about delta = 5 dx at this time step
    BURGERS_SCHEME = "rusanov"
    BURGERS_C_COEFF = 5.0
    BURGERS_ALPHA = 1.0
    BURGERS_EPS_MIN = 1e-4
    BURGERS_EPS_MAX = 0.2
    BURGERS_RECORD_TIMES = (0.018, 0.51, 1.0, 1.5, 2.0)

    # Euler moving shock
    EULER_MACH = 5.3452
    EULER_SHOCK_SPEED = 0.1
    EULER_X_SHOCK0 = 5.0
    EULER_DX = 0.01
    EULER_DOMAIN_LENGTH = 30.0
    EULER_T_FINAL = 100.0
    EULER_LONG_DOMAIN_LENGTH = 210.0
    EULER_LONG_T_FINAL = 1000.0
    EULER_CFL = 0.82
    EULER_SCHEME = "rusanov"
    EULER_C_COEFF = 20.0
    EULER_ALPHA = 1.0
    EULER_EPS_MIN = 1e-5
    EULER_EPS_MAX = 0.1

    # Numerics
    DT_MAX = 1.0
    DENOM_FLOOR_FACTOR = 1e-3
    GHOST_CELLS = 2
    GAUSS_POINTS = 5

    # Harness
    EPS_POINTS = 25
    JOBS = 1
    OUTPUT_DIR = "results"

    # Logging
    LOG_LEVEL = "INFO"


settings = Settings()


def load_case_file(path: str) -> dict:
    """Reads a flat key=value case file without touching the process environment."""
    try:
        with open(path, "r", encoding="utf-8") as f:
            values = dotenv_values(stream=f)
    except OSError as e:
        raise ConfigError(f"Cannot read case file {path}: {e}") from e
    return {key.strip().lower(): value for key, value in values.items() if value is not None}


def burgers_table_row(grid_no: int) -> tuple:
    if grid_no not in settings.BURGERS_TABLE:
        raise ConfigError(f"Unknown Burgers grid No. {grid_no}; expected 1..{len(settings.BURGERS_TABLE)}")
    return settings.BURGERS_TABLE[grid_no]
