from sqlalchemy import Boolean, Column, DateTime, Float, Integer, JSON, String, Text
from sqlalchemy.sql import func

from database.config import Base


class RunRecord(Base):
    __tablename__ = "run_records"

    id = Column(Integer, primary_key=True, index=True)
    mode = Column(String(32), nullable=False, index=True)  # analytic, oracle-direct, compare, ...
    config = Column(JSON)
    output_dir = Column(String(500))

    # 运行结果
    success = Column(Boolean, default=True)
    exit_code = Column(Integer, default=0)
    final_time = Column(Float)
    final_mean_n = Column(Float)
    final_purity = Column(Float)
    final_trace_err = Column(Float)
    final_tail_pop = Column(Float)
    max_compare_diff = Column(Float)  # 仅 compare 模式
    limit_distance = Column(Float)    # 仅 limit-cycle 模式
    runtime_s = Column(Float)
    memory_mb = Column(Float)

    error_message = Column(Text)
    created_at = Column(DateTime(timezone=True), server_default=func.now())
