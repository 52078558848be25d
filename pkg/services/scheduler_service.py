"""
fabsim v1.0 - 工作排程器

功能：sweep 格的工作佇列、多執行緒並行、單一收集者依序交付結果
"""
from typing import Callable, List, Optional

import queue
import threading
import time

import config
from pylib.atoms.safe_exec import capture
from services.logger_service import get_logger

logger = get_logger('fabsim.scheduler')


# ===== 任務定義 =====

class Task:
    """一個 sweep 格（或任何可獨立執行的工作）"""

    def __init__(self, name, func, *args, **kwargs) -> None:
        self.name = name
        self.func = func
        self.args = args
        self.kwargs = kwargs
        self.result = None
        self.error: Optional[BaseException] = None
        self.duration_ms = 0.0
        self.worker = None

    def run(self) -> 'Task':
        """執行任務；例外記錄在 task.error，不往外拋"""
        start_time = time.perf_counter()
        got = capture(self.func, *self.args, **self.kwargs)
        self.duration_ms = (time.perf_counter() - start_time) * 1000
        self.result, self.error = got.value, got.error
        if not got.ok:
            logger.error(f"Task {self.name} failed: {got.error}",
                         extra={'cell': self.name, 'duration_ms': self.duration_ms})
        return self

    @property
    def ok(self) -> bool:
        return self.error is None


# ===== 任務佇列 =====

class TaskQueue:
    """生產者-消費者佇列：工作執行緒跑任務，結果交給單一收集者

    收集者（呼叫 run() 的執行緒）是唯一處理結果的地方，
    交付順序與提交順序一致。
    """

    def __init__(self, max_workers=None) -> None:
        self.max_workers = max(1, int(max_workers or config.THREADS))
        self.tasks: List[Task] = []
        self.lock = threading.Lock()
        self._pending: 'queue.Queue[Optional[int]]' = queue.Queue()
        self._done: 'queue.Queue[int]' = queue.Queue()

    def add(self, name, func, *args, **kwargs) -> Task:
        """添加任務到佇列"""
        task = Task(name, func, *args, **kwargs)
        with self.lock:
            self.tasks.append(task)
        return task

    def _worker(self, worker_id: int) -> None:
        while True:
            index = self._pending.get()
            if index is None:
                break
            task = self.tasks[index]
            task.worker = worker_id
            task.run()
            self._done.put(index)

    def run(self, on_result: Optional[Callable[[Task], None]] = None) -> List[Task]:
        """執行所有任務；on_result 依提交順序在本執行緒被呼叫"""
        count = len(self.tasks)
        if count == 0:
            return []
        workers = min(self.max_workers, count)
        if workers == 1:
            for i, task in enumerate(self.tasks):
                task.worker = 0
                task.run()
                if on_result:
                    on_result(task)
            return list(self.tasks)

        for i in range(count):
            self._pending.put(i)
        threads = []
        for w in range(workers):
            self._pending.put(None)
            t = threading.Thread(target=self._worker, args=(w,), daemon=True)
            t.start()
            threads.append(t)

        finished = set()
        next_index = 0
        while next_index < count:
            finished.add(self._done.get())
            while next_index in finished:
                if on_result:
                    on_result(self.tasks[next_index])
                next_index += 1

        for t in threads:
            t.join()
        logger.debug(f"task queue finished {count} tasks on {workers} workers")
        return list(self.tasks)


# 📚 知識點
# -----------
# 1. queue.Queue：
#    - 執行緒安全，不需要自己上鎖
#    - None 當作結束哨兵，每個工作執行緒收一個
#
# 2. 單一收集者：
#    - 工作執行緒只回報索引
#    - 寫檔由呼叫 run() 的執行緒負責，結果依提交順序交付
#
# 3. daemon=True：
#    - 主程式結束時自動終止
#
# 4. GIL：
#    - 純 Python 模擬受 GIL 限制，執行緒數只是上限
#    - FABSIM_THREADS=1 時直接在呼叫端執行，方便除錯
