"""
Sweep Runner

Executes grid points, sequentially or in a process pool, and hands results
back in grid order whatever the completion order. SIGINT/SIGTERM stop the run
after the point in progress.
"""

import signal
import threading
from concurrent.futures import ProcessPoolExecutor


class SweepRunner:
    """Run one job per grid point and deliver results in order."""

    def __init__(self, jobs, evaluate_function, workers=1, on_result=None):
        """Initialize the runner.

        Args:
            jobs: list of picklable job objects, in grid order
            evaluate_function: module-level callable job -> result
            workers: worker processes (1 runs in-process)
            on_result: callback(index, result) called in grid order
        """
        self.jobs = list(jobs)
        self.evaluate_function = evaluate_function
        self.workers = workers
        self.on_result = on_result
        self.running = False
        self.completed = 0
        self._previous_handlers = {}

    def _signal_handler(self, signum, frame):
        """Handle shutdown signals gracefully."""
        print(f"\n🛑 Received shutdown signal ({signum}); stopping after the current grid point")
        self.stop()

    def _install_handlers(self):
        if threading.current_thread() is not threading.main_thread():
            return
        for signum in (signal.SIGINT, signal.SIGTERM):
            self._previous_handlers[signum] = signal.signal(signum, self._signal_handler)

    def _restore_handlers(self):
        for signum, handler in self._previous_handlers.items():
            signal.signal(signum, handler)
        self._previous_handlers = {}

    def stop(self):
        self.running = False

    def start(self):
        """Run every job; returns the results in grid order.

        A stopped run returns the results finished so far.
        """
        self.running = True
        self.completed = 0
        self._install_handlers()
        results = []
        try:
            if self.workers > 1 and len(self.jobs) > 1:
                results = self._run_pool()
            else:
                for index, job in enumerate(self.jobs):
                    if not self.running:
                        break
                    results.append(self._deliver(index, self.evaluate_function(job)))
        finally:
            self._restore_handlers()
            self.running = False

        if self.completed < len(self.jobs):
            print(f"⚠️  Sweep stopped early: {self.completed}/{len(self.jobs)} jobs completed")
        return results

    def _run_pool(self):
        results = []
        with ProcessPoolExecutor(max_workers=self.workers) as pool:
            futures = [pool.submit(self.evaluate_function, job) for job in self.jobs]
            for index, future in enumerate(futures):
                if not self.running:
                    for pending in futures[index:]:
                        pending.cancel()
                    break
                results.append(self._deliver(index, future.result()))
        return results

    def _deliver(self, index, result):
        self.completed += 1
        if self.on_result:
            self.on_result(index, result)
        return result
