import logging
import os
import time
from datetime import datetime
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

import numpy as np
import pandas as pd
import psutil

from services.analytic import QuadratureControl, assemble_general_solution, limit_cycle_density
from services.errors import DomainError, IntegrationError, QuadratureError, TruncationOverflowError
from services.fock import DensityMatrix, build_ladder_ops
from services.lindblad_core import HarmonicForce, Trajectory, integrate
from services.observables import ObservableReport, report, trace_distance
from services.records_manager import RecordsManager
from services.run_config import RunConfig
from services.superop import evolve_vectorized

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_INTEGRATION = 3
EXIT_TRUNCATION = 4
EXIT_TOLERANCE = 5

TRAJECTORY_COLUMNS = ['t', 're_mean_a', 'im_mean_a', 'mean_n', 'purity', 'trace_err', 'min_eig', 'tail_pop']
COMPARISON_COLUMNS = ['t', 'max_abs_diff', 'trace_distance']
FLOAT_FORMAT = '%.17g'


class RunEngine:
    def __init__(self, records_manager: Optional[RecordsManager] = None):
        self.logger = logging.getLogger(__name__)
        self.records_manager = records_manager
        self.quadrature = QuadratureControl()

    def run(self, config: RunConfig, out_dir: Union[str, Path, None] = None) -> Dict[str, Any]:
        """执行一次运行并写出结果文件"""
        start_time = time.time()
        out_dir = Path(out_dir or config.output)
        try:
            out_dir.mkdir(parents=True, exist_ok=True)
            self.logger.info(f"开始运行: mode={config.mode}, N={config.N}, 输出目录 {out_dir}")

            summary = self._execute(config, out_dir)
            exit_code = self._exit_code(config, summary)
            summary['exit_code'] = exit_code
            summary['runtime_s'] = time.time() - start_time
            summary['memory_mb'] = psutil.Process(os.getpid()).memory_info().rss / 1024 / 1024
            self._write_summary(out_dir / 'summary.txt', summary)

            result = {
                'success': exit_code == EXIT_OK,
                'exit_code': exit_code,
                'data': summary,
                'message': f'运行完成, 退出码 {exit_code}',
                'timestamp': datetime.now().isoformat()
            }
        except (IntegrationError, QuadratureError) as e:
            result = self._failure(EXIT_INTEGRATION, e)
        except DomainError as e:
            result = self._failure(EXIT_CONFIG, e)
        except (ValueError, ArithmeticError) as e:
            # 其余数值失败 (线性代数, 溢出) 归入积分失败
            result = self._failure(EXIT_INTEGRATION, e)

        self._record(config, out_dir, result, time.time() - start_time)
        return result

    def _failure(self, exit_code: int, error: Exception) -> Dict[str, Any]:
        self.logger.error(f"运行失败: {str(error)}")
        return {
            'success': False,
            'exit_code': exit_code,
            'error': str(error),
            'timestamp': datetime.now().isoformat()
        }

    def _execute(self, config: RunConfig, out_dir: Path) -> Dict[str, Any]:
        ops = build_ladder_ops(config.N)
        params = config.params()
        rho0 = config.initial_state(ops)
        rho0.check(config.tolerances())
        grid = config.t_grid()
        summary: Dict[str, Any] = {'mode': config.mode, 'N': config.N, 'n_points': len(grid)}

        if config.mode == 'analytic':
            states = self._analytic_states(rho0, params, grid, ops, config)
        elif config.mode == 'oracle-direct':
            states = self._oracle(rho0, params, grid, config, 'direct', summary).states
        elif config.mode == 'oracle-vectorized':
            states = self._oracle(rho0, params, grid, config, 'vectorized', summary).states
        elif config.mode == 'compare':
            analytic_states = self._analytic_states(rho0, params, grid, ops, config)
            states = self._oracle(rho0, params, grid, config, config.oracle, summary).states
            summary['max_compare_diff'] = self._write_comparison(
                out_dir / 'comparison.csv', grid, analytic_states, states)
        else:
            states = self._oracle(rho0, params, grid, config, config.oracle, summary).states
            force = params.force
            f0, Omega = (force.f0, force.Omega) if isinstance(force, HarmonicForce) else (0.0, 0.0)
            target = limit_cycle_density(f0, Omega, params, float(grid[-1]), ops, config.tail_tol)
            summary['limit_distance'] = trace_distance(states[-1], target)

        reports = [report(state, ops, t) for t, state in zip(grid, states)]
        self._write_trajectory(out_dir / 'trajectory.csv', reports)

        final = reports[-1]
        summary.update(
            t_final=final.t,
            final_mean_n=final.mean_n,
            final_re_mean_a=final.mean_a.real,
            final_im_mean_a=final.mean_a.imag,
            final_purity=final.purity,
            final_trace_err=final.trace_err,
            final_min_eig=final.min_eig,
            final_tail_pop=final.tail_pop,
            max_trace_err=max(r.trace_err for r in reports),
            max_herm_defect=max(r.herm_defect for r in reports),
            min_eig=min(r.min_eig for r in reports),
            max_tail_pop=max(r.tail_pop for r in reports),
        )
        return summary

    def _analytic_states(self, rho0: DensityMatrix, params, grid: np.ndarray, ops,
                         config: RunConfig) -> List[DensityMatrix]:
        return [assemble_general_solution(rho0, params, float(t), ops, tail_tol=config.tail_tol,
                                          control=self.quadrature)
                for t in grid]

    def _oracle(self, rho0: DensityMatrix, params, grid: np.ndarray, config: RunConfig,
                oracle: str, summary: Dict[str, Any]) -> Trajectory:
        evolve = integrate if oracle == 'direct' else evolve_vectorized
        trajectory = evolve(rho0, params, grid, config.step_control())
        summary['oracle'] = oracle
        summary['error_estimate'] = trajectory.error_estimate
        summary['n_accepted_steps'] = len(trajectory.diagnostics)
        return trajectory

    def _exit_code(self, config: RunConfig, summary: Dict[str, Any]) -> int:
        if summary['max_tail_pop'] > config.tail_tol:
            overflow = TruncationOverflowError(f"截断维数 N={config.N} 不足", summary['max_tail_pop'])
            self.logger.warning(str(overflow))
            summary['error'] = str(overflow)
            return EXIT_TRUNCATION
        breaches = []
        if summary.get('max_compare_diff', 0.0) > config.compare_tol:
            breaches.append(f"对照差 {summary['max_compare_diff']:.3e}")
        if summary.get('limit_distance', 0.0) > config.limit_tol:
            breaches.append(f"极限环迹距离 {summary['limit_distance']:.3e}")
        if summary['max_trace_err'] > config.trajectory_trace_tol:
            breaches.append(f"迹误差 {summary['max_trace_err']:.3e}")
        if summary['max_herm_defect'] > config.herm_tol:
            breaches.append(f"厄米偏差 {summary['max_herm_defect']:.3e}")
        if summary['min_eig'] < -config.pos_tol:
            breaches.append(f"最小本征值 {summary['min_eig']:.3e}")
        if breaches:
            self.logger.warning(f"超出容差: {', '.join(breaches)}")
            return EXIT_TOLERANCE
        return EXIT_OK

    @staticmethod
    def _write_trajectory(path: Path, reports: List[ObservableReport]) -> None:
        frame = pd.DataFrame({
            't': [r.t for r in reports],
            're_mean_a': [r.mean_a.real for r in reports],
            'im_mean_a': [r.mean_a.imag for r in reports],
            'mean_n': [r.mean_n for r in reports],
            'purity': [r.purity for r in reports],
            'trace_err': [r.trace_err for r in reports],
            'min_eig': [r.min_eig for r in reports],
            'tail_pop': [r.tail_pop for r in reports],
        }, columns=TRAJECTORY_COLUMNS)
        frame.to_csv(path, index=False, float_format=FLOAT_FORMAT)

    @staticmethod
    def _write_comparison(path: Path, grid: np.ndarray, analytic: List[DensityMatrix],
                          oracle: List[DensityMatrix]) -> float:
        differences = [float(np.max(np.abs(a.data - o.data))) for a, o in zip(analytic, oracle)]
        distances = [trace_distance(a, o) for a, o in zip(analytic, oracle)]
        frame = pd.DataFrame({'t': grid, 'max_abs_diff': differences, 'trace_distance': distances},
                             columns=COMPARISON_COLUMNS)
        frame.to_csv(path, index=False, float_format=FLOAT_FORMAT)
        return max(differences)

    @staticmethod
    def _write_summary(path: Path, summary: Dict[str, Any]) -> None:
        lines = []
        for key, value in summary.items():
            if isinstance(value, float):
                value = FLOAT_FORMAT % value
            lines.append(f"{key} = {value}")
        path.write_text("\n".join(lines) + "\n", encoding='utf-8')

    def _record(self, config: RunConfig, out_dir: Path, result: Dict[str, Any], runtime: float) -> None:
        """写入运行记录库; 失败只记日志"""
        if self.records_manager is None:
            return
        data = result.get('data', {})
        try:
            self.records_manager.create_record(
                mode=config.mode,
                config=config.model_dump(mode='json', exclude={'force_times', 'force_values'}),
                output_dir=str(out_dir),
                success=result['success'],
                exit_code=result['exit_code'],
                final_time=data.get('t_final'),
                final_mean_n=data.get('final_mean_n'),
                final_purity=data.get('final_purity'),
                final_trace_err=data.get('final_trace_err'),
                final_tail_pop=data.get('final_tail_pop'),
                max_compare_diff=data.get('max_compare_diff'),
                limit_distance=data.get('limit_distance'),
                runtime_s=data.get('runtime_s', runtime),
                memory_mb=data.get('memory_mb'),
                error_message=result.get('error')
            )
        except Exception as e:
            self.logger.error(f"写入运行记录失败: {str(e)}")
