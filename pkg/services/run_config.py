"""
运行配置: 逐行 `key = value` 文本, `#` 之后为注释

    mode    = compare
    omega   = 1
    mu      = 0.3
    nu      = 0.1
    force   = harmonic
    initial = thermal-coherent(0.5+0.2j, 0.4)
    t_max   = 10
    n_steps = 200
"""
import logging
import re
from pathlib import Path
from typing import Dict, Literal, Optional, Tuple, Union

import numpy as np
import pandas as pd
from pydantic import (
    BaseModel, ConfigDict, Field, ValidationError, ValidationInfo, field_validator, model_validator,
)

from services.analytic import ThermalCoherentState, thermal_coherent_density
from services.errors import ConfigError, DomainError
from services.fock import (
    DensityMatrix, FockOperators, Tolerances, coherent_state, fock_state, thermal_state,
)
from services.lindblad_core import (
    ForceSpec, HarmonicForce, OscillatorParams, SampledForce, StepControl, ZeroForce,
)

logger = logging.getLogger(__name__)

REQUIRED_KEYS = ('mode', 'omega', 'mu', 'nu', 'force', 'initial', 't_max', 'n_steps')
OPTIONAL_KEYS = ('f0', 'Omega', 'force_file', 'N', 'oracle', 'rtol', 'atol', 'herm_tol',
                 'trace_tol', 'trajectory_trace_tol', 'pos_tol', 'tail_tol', 'compare_tol', 'limit_tol',
                 'output')
KNOWN_KEYS = REQUIRED_KEYS + OPTIONAL_KEYS

_INITIAL_PATTERN = re.compile(r'^([a-z][a-z-]*)\s*(?:\((.*)\))?$')


class InitialSpec(BaseModel):
    """初态描述"""
    model_config = ConfigDict(extra='forbid', frozen=True)

    kind: Literal['vacuum', 'coherent', 'thermal', 'thermal-coherent', 'fock']
    alpha_re: float = 0.0
    alpha_im: float = 0.0
    u: float = 0.0
    n: int = 0

    @property
    def alpha(self) -> complex:
        return complex(self.alpha_re, self.alpha_im)

    @model_validator(mode='after')
    def _check_ranges(self):
        if self.kind == 'thermal' and not 0.0 <= self.u < 1.0:
            raise ValueError(f"thermal 的 u 必须在 [0, 1) 内, 得到 {self.u}")
        if self.kind == 'thermal-coherent' and not 0.0 < self.u < 1.0:
            raise ValueError(f"thermal-coherent 的 u 必须在 (0, 1) 内, 得到 {self.u}")
        if self.kind == 'fock' and self.n < 0:
            raise ValueError(f"fock 的 n 必须非负, 得到 {self.n}")
        return self


class RunConfig(BaseModel):
    """一次批处理运行的全部参数"""
    model_config = ConfigDict(extra='forbid', frozen=True)

    mode: Literal['analytic', 'oracle-direct', 'oracle-vectorized', 'compare', 'limit-cycle']
    omega: float = Field(gt=0)
    mu: float
    nu: float = Field(ge=0)
    force: Literal['zero', 'harmonic', 'sampled-file']
    f0: float = 0.2
    Omega: float = Field(0.9, ge=0)
    force_file: Optional[Path] = None
    force_times: Tuple[float, ...] = ()
    force_values: Tuple[float, ...] = ()
    N: int = Field(40, ge=2)
    initial: InitialSpec
    t_max: float = Field(gt=0)
    n_steps: int = Field(ge=1)
    oracle: Literal['direct', 'vectorized'] = 'direct'
    rtol: float = Field(1e-10, gt=0)
    atol: float = Field(1e-12, gt=0)
    herm_tol: float = Field(1e-10, gt=0)
    trace_tol: float = Field(1e-10, gt=0)
    # 沿轨迹的迹漂移上限, 初态构造仍用 trace_tol
    trajectory_trace_tol: float = Field(1e-8, gt=0)
    pos_tol: float = Field(1e-8, gt=0)
    tail_tol: float = Field(1e-10, gt=0)
    compare_tol: float = Field(1e-6, gt=0)
    limit_tol: float = Field(1e-4, gt=0)
    output: Path = Path('output')

    @field_validator('nu')
    @classmethod
    def _mu_exceeds_nu(cls, nu: float, info: ValidationInfo) -> float:
        mu = info.data.get('mu')
        if mu is not None and not mu > nu:
            raise ValueError(f"requires mu > nu (mu={mu}, nu={nu})")
        return nu

    @field_validator('force')
    @classmethod
    def _limit_cycle_force(cls, force: str, info: ValidationInfo) -> str:
        if info.data.get('mode') == 'limit-cycle' and force == 'sampled-file':
            raise ValueError("limit-cycle 模式只支持 zero 或 harmonic 驱动")
        return force

    @field_validator('initial')
    @classmethod
    def _initial_fits_truncation(cls, initial: InitialSpec, info: ValidationInfo) -> InitialSpec:
        N = info.data.get('N')
        if initial.kind == 'fock' and N is not None and initial.n >= N:
            raise ValueError(f"fock({initial.n}) 超出截断维数 N={N}")
        return initial

    @model_validator(mode='after')
    def _sampled_force_loaded(self):
        if self.force == 'sampled-file' and len(self.force_times) < 2:
            raise ValueError("force = sampled-file 需要 force_file 提供至少 2 个样本")
        return self

    def force_spec(self) -> ForceSpec:
        if self.force == 'zero':
            return ZeroForce()
        if self.force == 'harmonic':
            return HarmonicForce(f0=self.f0, Omega=self.Omega)
        return SampledForce(times=self.force_times, values=self.force_values)

    def params(self) -> OscillatorParams:
        return OscillatorParams(omega=self.omega, mu=self.mu, nu=self.nu, force=self.force_spec())

    def t_grid(self) -> np.ndarray:
        return np.linspace(0.0, self.t_max, self.n_steps + 1)

    def step_control(self) -> StepControl:
        return StepControl(rtol=self.rtol, atol=self.atol, tail_tol=self.tail_tol)

    def tolerances(self) -> Tolerances:
        return Tolerances(herm_tol=self.herm_tol, trace_tol=self.trace_tol,
                          pos_tol=self.pos_tol, tail_tol=self.tail_tol)

    def initial_state(self, ops: FockOperators) -> DensityMatrix:
        """在截断空间中实现初态"""
        spec = self.initial
        if spec.kind == 'vacuum':
            return fock_state(0, ops)
        if spec.kind == 'fock':
            return fock_state(spec.n, ops)
        if spec.kind == 'coherent':
            return coherent_state(spec.alpha, ops)
        if spec.kind == 'thermal':
            return thermal_state(spec.u, ops)
        return thermal_coherent_density(ThermalCoherentState(alpha=spec.alpha, u=spec.u), ops)


def parse_initial(value: str, line: Optional[int] = None) -> Dict[str, Union[str, float, int]]:
    """解析 vacuum | coherent(α) | thermal(u) | thermal-coherent(α, u) | fock(n)"""
    match = _INITIAL_PATTERN.match(value.strip())
    if not match:
        raise ConfigError(f"无法解析初态: {value!r}", line)
    kind, raw_args = match.group(1), match.group(2)
    args = [] if raw_args is None or not raw_args.strip() else [a.strip() for a in raw_args.split(',')]
    expected = {'vacuum': 0, 'coherent': 1, 'thermal': 1, 'thermal-coherent': 2, 'fock': 1}
    if kind not in expected:
        raise ConfigError(f"未知的初态类型: {kind}", line)
    if len(args) != expected[kind]:
        raise ConfigError(f"{kind} 需要 {expected[kind]} 个参数, 得到 {len(args)}", line)
    try:
        spec: Dict[str, Union[str, float, int]] = {'kind': kind}
        if kind in ('coherent', 'thermal-coherent'):
            alpha = complex(args[0].replace(' ', ''))
            spec.update(alpha_re=alpha.real, alpha_im=alpha.imag)
        if kind == 'thermal':
            spec['u'] = float(args[0])
        if kind == 'thermal-coherent':
            spec['u'] = float(args[1])
        if kind == 'fock':
            spec['n'] = int(args[0])
    except ValueError as e:
        raise ConfigError(f"初态参数无效: {value!r} ({e})", line) from e
    return spec


def load_force_samples(path: Path, line: Optional[int] = None) -> Tuple[Tuple[float, ...], Tuple[float, ...]]:
    """读取两列 CSV `t,f`"""
    try:
        frame = pd.read_csv(path)
        times = tuple(float(x) for x in frame['t'].to_numpy(dtype=float))
        values = tuple(float(x) for x in frame['f'].to_numpy(dtype=float))
        SampledForce(times=times, values=values)
    except DomainError as e:
        raise ConfigError(f"驱动采样文件 {path} 无效: {e}", line) from e
    except (OSError, KeyError, ValueError, pd.errors.ParserError, pd.errors.EmptyDataError) as e:
        raise ConfigError(f"无法读取驱动采样文件 {path}: {e}", line) from e
    return times, values


def parse_config(text: str, base_dir: Optional[Path] = None) -> RunConfig:
    """解析并校验运行配置"""
    values: Dict[str, object] = {}
    lines: Dict[str, int] = {}
    for number, raw in enumerate(text.splitlines(), start=1):
        content = raw.split('#', 1)[0].strip()
        if not content:
            continue
        key, sep, value = content.partition('=')
        key, value = key.strip(), value.strip()
        if not sep or not key:
            raise ConfigError(f"应为 `key = value`, 得到 {content!r}", number)
        if key not in KNOWN_KEYS:
            raise ConfigError(f"未知的键: {key}", number)
        if key in lines:
            raise ConfigError(f"重复的键: {key} (首次出现在第 {lines[key]} 行)", number)
        if not value:
            raise ConfigError(f"键 {key} 缺少取值", number)
        lines[key] = number
        values[key] = value

    missing = [key for key in REQUIRED_KEYS if key not in values]
    if missing:
        raise ConfigError(f"缺少必需的键: {', '.join(missing)}")

    values['initial'] = parse_initial(str(values['initial']), lines['initial'])
    if 'force_file' in values:
        path = Path(str(values['force_file']))
        if not path.is_absolute() and base_dir is not None:
            path = Path(base_dir) / path
        values['force_file'] = path
        if values['force'] == 'sampled-file':
            times, samples = load_force_samples(path, lines['force_file'])
            values['force_times'], values['force_values'] = times, samples

    try:
        config = RunConfig(**values)
    except ValidationError as e:
        first = e.errors()[0]
        key = str(first['loc'][0]) if first['loc'] else None
        raise ConfigError(f"{key or '配置'}: {first['msg']}", lines.get(key)) from e
    logger.debug(f"配置解析完成: mode={config.mode}, N={config.N}")
    return config


def load_config(path: Union[str, Path]) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding='utf-8')
    except (OSError, UnicodeDecodeError) as e:
        raise ConfigError(f"无法读取配置文件 {path}: {e}") from e
    return parse_config(text, base_dir=path.parent)
