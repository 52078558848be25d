"""
fabsim v1.0 - 指令列測試

測試項目：
1. run / baseline / check / presets
2. sweep 續跑與 --fresh
3. report heatmap / timeseries / xlsx
4. 結束碼：2 設定錯誤、3 I/O 錯誤、4 熱圖缺格
"""
import contextlib
import io
import json
from pathlib import Path

import pytest

from handlers.router import dispatch
from main import main
from services import report_service

from .test_base import MINIMAL_CONFIG, AssertMixin, BaseTestCase, data_file
from .test_report import make_row

QUICK = MINIMAL_CONFIG + "iterations = 3\nwarmup = 1\n"
QUICK_SWEEP = QUICK + "sweep.vectors = 4KiB, 8KiB\n"


def run_cli(*argv):
    """回傳 (結束碼, stdout)"""
    buf = io.StringIO()
    with contextlib.redirect_stdout(buf):
        code = dispatch(list(argv))
    return code, buf.getvalue()


class TestRun(BaseTestCase, AssertMixin):

    def setUp(self):
        self.out = Path(self.temp_dir) / self._testMethodName
        self.conf = self.write_config(QUICK, 'quick.conf')

    def test_run_writes_table_and_meta(self):
        code, stdout = run_cli('run', '--config', str(self.conf), '--out', str(self.out))
        self.assertEqual(code, 0)
        csv_path = self.out / 'quick.csv'
        self.assertEqual(stdout.strip(), str(csv_path))
        rows = report_service.read_table(csv_path)
        self.assertEqual(len(rows), 1)
        self.assertEqual(rows[0].vector_bytes, 32768)
        self.assertEqual(rows[0].status, 'ok')
        meta = json.loads((self.out / 'quick.meta.json').read_text(encoding='utf-8'))
        self.assertEqual(meta['command'], 'run')
        self.assertIn('applied_defaults', meta)
        self.assertIn('host', meta)
        self.assertNoTempFiles(self.out)

    def test_identical_output_across_runs(self):
        run_cli('run', '--config', str(self.conf), '--out', str(self.out / 'a'))
        run_cli('run', '--config', str(self.conf), '--out', str(self.out / 'b'))
        self.assertEqual((self.out / 'a' / 'quick.csv').read_bytes(), (self.out / 'b' / 'quick.csv').read_bytes())

    def test_baseline_leaves_congested_columns_empty(self):
        code, _ = run_cli('baseline', '--config', str(self.conf), '--out', str(self.out))
        self.assertEqual(code, 0)
        row = report_service.read_table(self.out / 'quick.csv')[0]
        self.assertIsNotNone(row.baseline_mean_ns)
        self.assertIsNone(row.congested_mean_ns)
        self.assertIsNone(row.ratio)

    def test_trace_and_probe_outputs(self):
        code, _ = run_cli('run', '--config', str(self.conf), '--out', str(self.out), '--trace', '--probe', '1us')
        self.assertEqual(code, 0)
        trace = (self.out / 'quick.32768.trace.csv').read_text(encoding='utf-8').splitlines()
        self.assertEqual(trace[0], 'time,event_kind,link,flow,occupancy')
        series = self.out / 'quick.32768.timeseries.csv'
        self.assertTrue(report_service.read_timeseries(series).samples)

        code, stdout = run_cli('report', 'timeseries', str(series), '--out', str(self.out))
        self.assertEqual(code, 0)
        svg = self.out / 'quick.32768.timeseries.svg'
        self.assertEqual(stdout.strip(), str(svg))
        self.assertIn('cycles:', svg.read_text(encoding='utf-8'))

    def test_bad_config_exits_2(self):
        conf = self.write_config(MINIMAL_CONFIG.replace('nodes = 4', 'nodes = 3'), 'odd.conf')
        code, _ = run_cli('run', '--config', str(conf), '--out', str(self.out))
        self.assertEqual(code, 2)
        self.assertFalse((self.out / 'odd.csv').exists())

    def test_two_node_config_exits_2(self):
        conf = self.write_config(MINIMAL_CONFIG.replace('nodes = 4', 'nodes = 2'), 'pair.conf')
        code, _ = run_cli('run', '--config', str(conf), '--out', str(self.out))
        self.assertEqual(code, 2)
        self.assertFalse((self.out / 'pair.csv').exists())

    def test_unwritable_output_exits_3(self):
        blocker = Path(self.temp_dir) / 'blocker'
        blocker.write_text('not a directory', encoding='utf-8')
        code, _ = run_cli('run', '--config', str(self.conf), '--out', str(blocker / 'out'))
        self.assertEqual(code, 3)
        self.assertEqual(blocker.read_text(encoding='utf-8'), 'not a directory')

    def test_seed_must_fit_64_bits(self):
        with pytest.raises(SystemExit):
            run_cli('run', '--config', str(self.conf), '--seed', str(2 ** 64))


class TestSweep(BaseTestCase):

    def setUp(self):
        self.out = Path(self.temp_dir) / self._testMethodName
        self.conf = self.write_config(QUICK_SWEEP, 'grid.conf')
        self.argv = ['sweep', '--config', str(self.conf), '--out', str(self.out)]
        self.csv = self.out / 'grid.csv'

    def test_sweep_then_resume_changes_nothing(self):
        self.assertEqual(run_cli(*self.argv)[0], 0)
        first = self.csv.read_bytes()
        self.assertEqual([r.vector_bytes for r in report_service.read_table(self.csv)], [4096, 8192])
        self.assertEqual(run_cli(*self.argv)[0], 0)
        self.assertEqual(self.csv.read_bytes(), first)

    def test_explicit_resume_without_manifest_exits_3(self):
        self.assertEqual(run_cli(*self.argv, '--resume')[0], 3)

    def test_edited_table_refuses_resume_until_fresh(self):
        run_cli(*self.argv)
        lines = self.csv.read_text(encoding='utf-8').splitlines(keepends=True)
        lines[1] = lines[1].replace('haicgu-sw', 'haicgu-sx', 1)
        self.csv.write_text(''.join(lines), encoding='utf-8')
        self.assertEqual(run_cli(*self.argv)[0], 3)
        self.assertEqual(run_cli(*self.argv, '--fresh')[0], 0)
        self.assertEqual(len(report_service.read_table(self.csv)), 2)

    def test_different_seed_is_a_different_sweep(self):
        run_cli(*self.argv)
        self.assertEqual(run_cli(*self.argv, '--seed', '99')[0], 3)

    def test_run_ignores_sweep_axes(self):
        code, _ = run_cli('run', '--config', str(self.conf), '--out', str(self.out))
        self.assertEqual(code, 0)
        self.assertEqual(len(report_service.read_table(self.csv)), 1)

    def test_heatmap_and_xlsx_from_sweep(self):
        run_cli(*self.argv)
        code, stdout = run_cli('report', 'heatmap', str(self.csv), '--out', str(self.out))
        self.assertEqual(code, 0)
        svg = self.out / 'grid.heatmap.svg'
        self.assertEqual(stdout.strip(), str(svg))
        self.assertIn('>4KiB<', svg.read_text(encoding='utf-8'))
        self.assertTrue((self.out / 'grid.heatmap.meta.json').exists())

        code, _ = run_cli('report', 'xlsx', str(self.csv), '--out', str(self.out))
        self.assertEqual(code, 0)
        self.assertTrue((self.out / 'grid.xlsx').stat().st_size > 0)


class TestReportErrors(BaseTestCase):

    def setUp(self):
        self.out = Path(self.temp_dir) / self._testMethodName

    def test_incomplete_grid_exits_4(self):
        rows = [make_row(nodes=n, vector=v) for n in (2, 4) for v in (4096, 8192)][:-1]
        table = report_service.write_table(Path(self.temp_dir) / 'partial.csv', rows)
        code, _ = run_cli('report', 'heatmap', str(table), '--out', str(self.out))
        self.assertEqual(code, 4)
        self.assertFalse((self.out / 'partial.heatmap.svg').exists())

    def test_inconsistent_ratio_exits_4(self):
        table = report_service.write_table(Path(self.temp_dir) / 'odd.csv', [make_row(congested_mean_ns=2000.0)])
        self.assertEqual(run_cli('report', 'heatmap', str(table), '--out', str(self.out))[0], 4)

    def test_facet_outputs(self):
        rows = [make_row(nodes=n, aggressor=a) for n in (2, 4) for a in ('incast', 'alltoall')]
        table = report_service.write_table(Path(self.temp_dir) / 'faceted.csv', rows)
        code, stdout = run_cli('report', 'heatmap', str(table), '--facet', 'aggressor', '--out', str(self.out))
        self.assertEqual(code, 0)
        self.assertEqual(stdout.split(), [str(self.out / 'faceted.heatmap.alltoall.svg'),
                                          str(self.out / 'faceted.heatmap.incast.svg')])

    def test_missing_table_exits_3(self):
        self.assertEqual(run_cli('report', 'heatmap', str(Path(self.temp_dir) / 'none.csv'))[0], 3)


def test_check_prints_normalized_config():
    code, stdout = run_cli('check', '--config', str(data_file('minimal.conf')))
    assert code == 0
    assert 'iterations = 1000  # default' in stdout


def test_check_reports_config_errors():
    assert run_cli('check', '--config', str(data_file('bad_many.conf')))[0] == 2


def test_presets_list():
    code, stdout = run_cli('presets', 'list')
    assert code == 0
    for name in ('haicgu-sw', 'nanjing-ls', 'cresco8-ft', 'leonardo-dfp', 'lumi-df', 'dcqcn.stable'):
        assert name in stdout


def test_main_validates_environment(monkeypatch):
    import config_manager
    monkeypatch.setattr(config_manager.Config, 'validate', classmethod(lambda cls: ['FABSIM_THREADS must be >= 1']))
    assert main(['presets', 'list']) == 2
