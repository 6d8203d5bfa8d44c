import sys
from threading import Lock, Condition
from util.detail import IS_PYINSTALLER

# Event stats are tracked together so that we can take snapshots at a point in time of all of them
# This can be useful for debugging and profiling
_stats_lock = Lock()
_stats_cv = Condition(_stats_lock)
_stats = dict()

"""

Stats are just counters that can be used to aid with debugging, unit tests, and integration tests. They are placed
around the numerical code (optimizer cycles, atom updates, coder failures, ...) and allow tests to check if something
happened or didnt happen. No actual functionality should depend on this module, only tests and the self-test.

"""


class Event:
    def __init__(self, name: str):
        self._name = name
        # Module names are used in conjunction with event name to help prevent event name collision
        self._module = _get_defining_module()
        self._key = _hash(name, self._module)

    @property
    def key(self) -> str:
        return self._key

    def increment(self, num=1):
        """Increments the counter for the event, indicating that it has occurred.

        :param num: Number by which to increment event counter
        :type num: int
        """

        if type(num) is not int or num < 1:
            raise ValueError("Invalid value for num")

        with _stats_cv:
            _stats[self._key] = _stats.get(self._key, 0) + num
            _stats_cv.notify_all()

    def count(self, snapshot) -> int:
        """Difference in event counter compared to snapshot, without waiting.

        :param snapshot: A previously captured snapshot to use for comparison
        :type snapshot: dict
        :return: difference in event counter
        :rtype: int
        """
        return self.wait(snapshot, timeout=0, num_expected=0)

    def wait(self, snapshot, timeout=60, num_expected=1):
        """Waits for the event counter to change compared to snapshot, indicating that it has occurred.

        Difference in event counter is returned so that tests can assert on number of occurrences.

        :param snapshot: A previously captured snapshot to use for comparision
        :type snapshot: dict
        :param timeout: Seconds after which to return
        :type timeout: float
        :param num_expected: Diff expected. Waits until num_expected event occurrences before returning (or timeout)
        :type num_expected: int
        :return: difference in event counter
        :rtype: int
        """

        initial_value = snapshot.get(self._key, 0)

        with _stats_cv:
            def current_value(): return _stats.get(self._key, 0)

            if current_value() < initial_value:
                raise ValueError("Invalid snapshot. Event counter greater than current value.")

            if num_expected > 0:
                _stats_cv.wait_for(lambda: current_value() - initial_value >= num_expected, timeout=timeout)

            return current_value() - initial_value


def get_event_stats_snapshot():
    """Returns a snapshot of the event stat counters to be compared with.

    :return: A copy of the event stat counters
    :rtype: dict
    """

    with _stats_lock:
        return _stats.copy()


def _get_defining_module():
    """Returns the name of the module that constructed the Event

    :return: Defining module name
    :rtype: str
    """
    frame = sys._getframe(2)  # 0 is this function, 1 is Event.__init__

    if not IS_PYINSTALLER:
        return frame.f_globals.get('__name__', '__unknown__')
    else:
        # Module names are unreliable in pyinstaller bundles, use file name instead
        return frame.f_code.co_filename


def _hash(event, module):
    """Hashes event name and module name to create a key for the stats dict

    :param event: Name of the event
    :type event: str
    :param module: Name of module in which event was defined
    :type module: str
    :return: Hash of event name and module name
    :rtype: str
    """
    return f"{module}.{event}"
