"""
Leitura antecipada de frames numa thread produtora com fila limitada.

A previsão de ocupação e o registo podem correr em pipeline: enquanto um
frame é registado, o seguinte já está a ser lido. O resultado não depende
disto; a ordem dos frames é preservada.
"""
import logging
import queue
import threading
from typing import Iterable, Iterator, TypeVar

logger = logging.getLogger(__name__)

T = TypeVar('T')

_DONE = object()


class _Failure:
    def __init__(self, error: BaseException):
        self.error = error


def prefetch(items: Iterable[T], maxsize: int = 4) -> Iterator[T]:
    """
    Itera sobre `items` com um produtor em segundo plano.

    Args:
        items: Iterável de origem (p.ex. iter_sequence)
        maxsize: Capacidade da fila; 0 desativa a thread

    Raises:
        Qualquer exceção do produtor, relançada no consumidor
    """
    if maxsize <= 0:
        yield from items
        return

    buffer: "queue.Queue" = queue.Queue(maxsize=maxsize)
    stop = threading.Event()

    def put(item) -> bool:
        """Entrega um item; desiste se o consumidor já parou."""
        while not stop.is_set():
            try:
                buffer.put(item, timeout=0.1)
                return True
            except queue.Full:
                continue
        return False

    def produce():
        try:
            for item in items:
                if not put(item):
                    return
            put(_DONE)
        except BaseException as e:  # relançada no consumidor
            put(_Failure(e))

    worker = threading.Thread(target=produce, name="occreg-prefetch", daemon=True)
    worker.start()
    try:
        while True:
            item = buffer.get()
            if item is _DONE:
                break
            if isinstance(item, _Failure):
                raise item.error
            yield item
    finally:
        stop.set()
        worker.join(timeout=1.0)
