import json
import logging
from typing import Any, Dict, List, Optional

from sqlalchemy import asc, desc

from database.config import Base, get_db, get_engine, get_session_factory
from database.models import RunRecord


class RecordsManager:
    """运行记录管理 - 每次 CLI 运行写入一行"""

    def __init__(self, database_url: str):
        self.logger = logging.getLogger(__name__)
        self.engine = get_engine(database_url)
        Base.metadata.create_all(bind=self.engine)
        self.session_factory = get_session_factory(self.engine)

    def create_record(self, mode: str, config: Dict[str, Any] = None, output_dir: str = None,
                      success: bool = True, exit_code: int = 0,
                      final_time: float = None, final_mean_n: float = None,
                      final_purity: float = None, final_trace_err: float = None,
                      final_tail_pop: float = None, max_compare_diff: float = None,
                      limit_distance: float = None, runtime_s: float = None,
                      memory_mb: float = None, error_message: str = None) -> RunRecord:
        """创建新的运行记录"""
        db = next(get_db(self.session_factory))
        try:
            record = RunRecord(
                mode=mode,
                config=config or {},
                output_dir=output_dir,
                success=success,
                exit_code=exit_code,
                final_time=final_time,
                final_mean_n=final_mean_n,
                final_purity=final_purity,
                final_trace_err=final_trace_err,
                final_tail_pop=final_tail_pop,
                max_compare_diff=max_compare_diff,
                limit_distance=limit_distance,
                runtime_s=runtime_s,
                memory_mb=memory_mb,
                error_message=error_message
            )

            db.add(record)
            db.commit()
            db.refresh(record)

            self.logger.info(f"创建运行记录成功: ID {record.id}")
            return record

        except Exception as e:
            self.logger.error(f"创建运行记录失败: {str(e)}")
            db.rollback()
            raise
        finally:
            db.close()

    def get_record(self, record_id: int) -> Optional[RunRecord]:
        """根据ID获取单个运行记录"""
        db = next(get_db(self.session_factory))
        try:
            return db.query(RunRecord).filter(RunRecord.id == record_id).first()
        except Exception as e:
            self.logger.error(f"获取运行记录失败: {str(e)}")
            return None
        finally:
            db.close()

    def get_all_records(self, limit: int = 100, offset: int = 0, mode: str = None,
                        order_dir: str = "desc") -> List[RunRecord]:
        """获取运行记录, 支持按模式过滤与分页"""
        db = next(get_db(self.session_factory))
        try:
            query = db.query(RunRecord)
            if mode:
                query = query.filter(RunRecord.mode == mode)

            order = asc if order_dir.lower() == "asc" else desc
            query = query.order_by(order(RunRecord.id))

            return query.offset(offset).limit(limit).all()

        except Exception as e:
            self.logger.error(f"获取运行记录列表失败: {str(e)}")
            return []
        finally:
            db.close()

    def delete_record(self, record_id: int) -> bool:
        db = next(get_db(self.session_factory))
        try:
            record = db.query(RunRecord).filter(RunRecord.id == record_id).first()
            if not record:
                self.logger.warning(f"运行记录不存在: ID {record_id}")
                return False

            db.delete(record)
            db.commit()
            self.logger.info(f"删除运行记录成功: ID {record_id}")
            return True

        except Exception as e:
            self.logger.error(f"删除运行记录失败: {str(e)}")
            db.rollback()
            return False
        finally:
            db.close()

    def get_record_statistics(self) -> Dict[str, Any]:
        """按模式统计运行次数与成功率"""
        db = next(get_db(self.session_factory))
        try:
            total = db.query(RunRecord).count()
            successful = db.query(RunRecord).filter(RunRecord.success.is_(True)).count()

            mode_stats = {}
            for (mode,) in db.query(RunRecord.mode).distinct().all():
                mode_stats[mode] = db.query(RunRecord).filter(RunRecord.mode == mode).count()

            return {
                'total_records': total,
                'successful_records': successful,
                'failed_records': total - successful,
                'success_rate': successful / total if total > 0 else 0,
                'mode_distribution': mode_stats
            }

        except Exception as e:
            self.logger.error(f"获取统计信息失败: {str(e)}")
            return {}
        finally:
            db.close()

    def export_records(self, limit: int = 10000) -> str:
        """导出为JSON格式"""
        records = self.get_all_records(limit=limit, order_dir="asc")
        return json.dumps([self.to_dict(record) for record in records], ensure_ascii=False, indent=2)

    @staticmethod
    def to_dict(record: RunRecord) -> Dict[str, Any]:
        return {
            'id': record.id,
            'mode': record.mode,
            'config': record.config,
            'output_dir': record.output_dir,
            'success': record.success,
            'exit_code': record.exit_code,
            'final_time': record.final_time,
            'final_mean_n': record.final_mean_n,
            'final_purity': record.final_purity,
            'final_trace_err': record.final_trace_err,
            'final_tail_pop': record.final_tail_pop,
            'max_compare_diff': record.max_compare_diff,
            'limit_distance': record.limit_distance,
            'runtime_s': record.runtime_s,
            'memory_mb': record.memory_mb,
            'error_message': record.error_message,
            'created_at': record.created_at.isoformat() if record.created_at else None
        }
