"""
数据模型（Pydantic schemas）
"""

from enum import Enum
from typing import Any, Dict, List, Literal, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from .config import DEFAULT_HIDDEN, DEFAULT_STENCIL_RADIUS, DEFAULT_TRAIN, RECIPES, settings


# 枚举类型
class ProblemKind(str, Enum):
    FORCED_BURGERS = "forced_burgers"
    KS = "ks"
    KDV = "kdv"
    ADVECTION = "advection"
    HEAT = "heat"


class Scheme(str, Enum):
    WENO_RK3 = "weno_rk3"
    SPECTRAL = "spectral"


class NoiseMode(str, Enum):
    NONE = "none"
    LEARN = "learn"


# 物理问题
class ForcingParams(BaseModel):
    """外力参数 f(x,t) = Σ A_i sin(ω_i t + 2π l_i x/L + φ_i)"""

    model_config = ConfigDict(frozen=True)

    amplitudes: List[float] = Field(..., description="振幅 A_i")
    frequencies: List[float] = Field(..., description="时间频率 ω_i")
    wavenumbers: List[int] = Field(..., description="整数波数 l_i")
    phases: List[float] = Field(..., description="相位 φ_i")
    L: float = Field(..., gt=0, description="区域长度")

    @model_validator(mode="after")
    def validate_lengths(self):
        n = len(self.amplitudes)
        if not (len(self.frequencies) == len(self.wavenumbers) == len(self.phases) == n):
            raise ValueError("forcing parameter lists must have equal length")
        return self

    @property
    def n_modes(self) -> int:
        return len(self.amplitudes)

    def evaluate(self, x, t):
        """在位置x、时间t处求值；t为向量时返回 (len(t), len(x))"""
        x = np.asarray(x, dtype=np.float64)
        t = np.asarray(t, dtype=np.float64)
        A = np.asarray(self.amplitudes)
        omega = np.asarray(self.frequencies)
        k = 2.0 * np.pi * np.asarray(self.wavenumbers, dtype=np.float64) / self.L
        phi = np.asarray(self.phases)
        # (..., 模态, 空间点)
        phase = (omega[:, None] * t[..., None, None] + k[:, None] * x[None, :] + phi[:, None])
        return np.einsum("i,...ij->...j", A, np.sin(phase))


class PdeProblem(BaseModel):
    """偏微分方程问题"""

    model_config = ConfigDict(frozen=True)

    kind: ProblemKind = Field(..., description="问题类型")
    D: float = Field(0.0, ge=0, description="粘性系数（burgers/heat）")
    delta: float = Field(0.0, description="色散系数（kdv）")
    c: float = Field(0.0, description="对流速度（advection）")
    forcing: Optional[ForcingParams] = Field(None, description="外力参数")


class NoiseSpec(BaseModel):
    """加性高斯噪声"""

    sigma: float = Field(..., ge=0, description="噪声幅度（std(U)的倍数）")
    seed: int = Field(0, description="随机种子")


# 训练配置
class TrainConfig(BaseModel):
    """训练配置"""

    q: int = Field(DEFAULT_TRAIN["q"], ge=1, description="训练时间窗口（每个方向的RK步数）")
    gamma: float = Field(DEFAULT_TRAIN["gamma"], gt=0, le=1, description="衰减权重底数")
    lambda_n: float = Field(DEFAULT_TRAIN["lambda_n"], ge=0, description="噪声惩罚")
    lambda_wd: float = Field(DEFAULT_TRAIN["lambda_wd"], ge=0, description="权重衰减")
    epochs: int = Field(DEFAULT_TRAIN["epochs"], ge=1, description="训练轮数")
    batch_size: int = Field(DEFAULT_TRAIN["batch_size"], ge=1, description="每批(i, n)锚点数")
    lr: float = Field(DEFAULT_TRAIN["lr"], gt=0, description="学习率")
    lr_decay: float = Field(DEFAULT_TRAIN["lr_decay"], gt=0, le=1, description="每轮学习率衰减")
    seed: int = Field(settings.DEFAULT_SEED, description="随机种子")
    m: int = Field(DEFAULT_STENCIL_RADIUS, ge=0, description="模板半径")
    hidden: List[int] = Field(default_factory=lambda: list(DEFAULT_HIDDEN), description="隐藏层宽度")
    activation: Literal["elu", "relu"] = Field("elu", description="隐藏层激活函数")
    noise: NoiseMode = Field(NoiseMode.NONE, description="是否学习噪声估计")
    fold_forcing: bool = Field(False, description="不提供已知外力，由网络一并学习")
    backward: bool = Field(True, description="损失中包含 −Δt 反向积分项（对称时间窗口）")

    @field_validator("hidden")
    def validate_hidden(cls, v):
        if any(width < 1 for width in v):
            raise ValueError("hidden layer widths must be positive")
        return v


# 数据生成预设
class Recipe(BaseModel):
    """基准问题预设"""

    name: str
    kind: ProblemKind
    L: float = Field(..., gt=0)
    n_points: int = Field(..., ge=3)
    origin: float = 0.0
    D: float = Field(0.0, ge=0)
    delta: float = 0.0
    c: float = 0.0
    scheme: Scheme
    dt: Optional[float] = Field(None, gt=0, description="生成时间步长，None为自动")
    T: float = Field(..., gt=0, description="模拟时长")
    T_train: float = Field(..., gt=0, description="训练时间窗口终点")
    C_space: int = Field(1, ge=1)
    C_time: Optional[int] = Field(None, ge=1)
    train_dt: Optional[float] = Field(None, gt=0, description="训练粗网格时间步长")
    sigma: float = Field(0.0, ge=0)
    coarse_variants: List[int] = Field(default_factory=list)
    forcing: bool = False
    domain_scale: int = Field(1, ge=1, description="区域放大倍数（保持dx不变）")

    @model_validator(mode="after")
    def validate_window(self):
        if self.T_train > self.T + 1e-12:
            raise ValueError("T_train must not exceed the simulated horizon T")
        return self

    @classmethod
    def from_name(cls, name: str, **overrides: Any) -> "Recipe":
        if name not in RECIPES:
            raise ValueError(f"unknown recipe {name!r}; available: {sorted(RECIPES)}")
        values = dict(RECIPES[name])
        values.update({k: v for k, v in overrides.items() if v is not None})
        return cls(name=name, **values)

    def problem(self, forcing: Optional[ForcingParams] = None) -> PdeProblem:
        return PdeProblem(kind=self.kind, D=self.D, delta=self.delta, c=self.c, forcing=forcing)


# 文件元数据
class DatasetMetadata(BaseModel):
    """数据集元数据（JSON附属文件）"""

    recipe: str
    kind: ProblemKind
    coefficients: Dict[str, float] = Field(default_factory=dict)
    seed: int
    L: float
    origin: float = 0.0
    fine_n_points: int
    fine_dt: float
    coarse_n_points: int
    coarse_dt: float
    C_space: int
    C_time: int
    crop_window: Tuple[float, float]
    forcing: Optional[ForcingParams] = None
    n_forcing_modes: Optional[int] = None
    sigma: float = 0.0
    truncated_rows: int = 0
    files: Dict[str, str] = Field(default_factory=dict)


class ModelMetadata(BaseModel):
    """模型检查点元数据"""

    version: str
    problem: str
    integrator: Literal["rk3_tvd"] = "rk3_tvd"
    activation: Literal["elu", "relu"] = "elu"
    m: int
    trained_dx: float
    trained_dt: float
    known_forcing: bool = False
    train_config: Optional[TrainConfig] = None
    dataset: Optional[str] = None


# 评估结果
class LyapunovFit(BaseModel):
    """最大Lyapunov指数拟合结果"""

    exponent: float
    window_start: int
    window_end: int
    r2: float
    found: bool
    slopes: List[float] = Field(default_factory=list)
    n_directions: int = 0


class EvalReport(BaseModel):
    """评估报告"""

    mse: float = Field(..., ge=0)
    per_time_errors: List[float] = Field(default_factory=list)
    spectrum: Dict[int, float] = Field(default_factory=dict)
    lyapunov: Optional[LyapunovFit] = None
    speedup: Optional[Dict[str, float]] = None
    horizon: Optional[float] = None
    n_steps: Optional[int] = None

    @field_validator("spectrum")
    def validate_spectrum(cls, v):
        if any(power < 0 for power in v.values()):
            raise ValueError("spectral power must be non-negative")
        return v


class DenoiseReport(BaseModel):
    """去噪质量报告"""

    correlation: float
    std_ratio: float
    ks_statistic: float
    bin_edges: List[float]
    estimate_counts: List[int]
    truth_counts: List[int]


# 实验配置
class EvalOptions(BaseModel):
    """评估选项"""

    horizon_factor: float = Field(1.0, ge=1, description="预测时长相对训练窗口的倍数")
    lyapunov: bool = Field(False, description="是否估计最大Lyapunov指数")
    lyapunov_directions: int = Field(10, ge=1)
    lyapunov_horizon: Optional[float] = Field(None, gt=0)
    domain_scale: int = Field(1, ge=1, description="在放大区域上评估")


class PathsConfig(BaseModel):
    """路径配置"""

    out_dir: str = Field(settings.OUTPUT_DIR, description="输出目录")
    dataset: Optional[str] = Field(None, description="粗网格训练数据（STN1）")
    checkpoint: Optional[str] = Field(None, description="模型检查点（STNM）")


class ExperimentConfig(BaseModel):
    """实验配置（JSON）"""

    recipe: str = Field("burgers", description="预设名称")
    overrides: Dict[str, Any] = Field(default_factory=dict, description="预设覆盖项")
    seed: int = Field(settings.DEFAULT_SEED, description="根随机种子")
    threads: Optional[int] = Field(None, ge=1)
    train: TrainConfig = Field(default_factory=TrainConfig)
    eval: EvalOptions = Field(default_factory=EvalOptions)
    paths: PathsConfig = Field(default_factory=PathsConfig)

    @field_validator("recipe")
    def validate_recipe(cls, v):
        if v not in RECIPES:
            raise ValueError(f"unknown recipe {v!r}")
        return v

    @model_validator(mode="after")
    def validate_overrides(self):
        # 预设覆盖项在任何计算之前校验
        self.resolve_recipe()
        return self

    def resolve_recipe(self) -> Recipe:
        return Recipe.from_name(self.recipe, **self.overrides)
