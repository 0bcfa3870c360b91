"""Server-side TCP sender state machines.

Five congestion-control behaviors sit behind one event-driven sender:

* ``TAHOE``            -- go-back fast retransmit: the window collapses to one
                          segment and ``snd_nxt`` is pulled back, so data past
                          the loss is sent again.
* ``RENO``             -- fast retransmit plus fast recovery: the window halves,
                          additional duplicate ACKs inflate the usable window,
                          and any new ACK ends recovery.
* ``NEWRENO``          -- Reno, except partial ACKs retransmit the next hole
                          and keep the sender in recovery until the entire
                          pre-loss window is acknowledged.
* ``NO_FAST_RETRANSMIT`` -- duplicate ACKs are counted but never acted on;
                          loss is repaired only by the retransmission timer.
* ``RENO_PLUS``        -- on the third duplicate ACK the window is left alone
                          and the sender go-back bursts from ``snd_una``,
                          re-sending data it already sent.

The sender is a pure state machine: time enters as an explicit argument,
segments leave as return values, and nothing here touches a clock or a
socket. All times are integer virtual microseconds; cwnd/ssthresh are raw
byte counts (deliberately not rounded to segment multiples).
"""

import enum
from dataclasses import dataclass

from .errors import ConfigurationError, InternalError, ProtocolError
from .wire import SERVER, Flag, Segment


class Variant(enum.Enum):
    TAHOE = "Tahoe"
    RENO = "Reno"
    NEWRENO = "NewReno"
    NO_FAST_RETRANSMIT = "NoFastRetransmit"
    RENO_PLUS = "RenoPlus"

    @classmethod
    def parse(cls, name: str) -> "Variant":
        for variant in cls:
            if variant.value.lower() == name.lower():
                return variant
        raise ConfigurationError(f"unknown variant: {name!r}")


# Variants that keep explicit fast-recovery state (and inflate the usable
# window by one mss per duplicate ACK while in it).
_RECOVERY_VARIANTS = frozenset(
    {Variant.RENO, Variant.NEWRENO, Variant.RENO_PLUS}
)


@dataclass(frozen=True)
class SenderConfig:
    mss: int = 1460
    initial_cwnd: int = 2  # segments
    initial_ssthresh: int = 65535  # bytes
    dupack_threshold: int = 3
    rto_initial_us: int = 1_000_000
    rto_min_us: int = 1_000_000
    rto_max_us: int = 64_000_000

    def validate(self) -> None:
        if self.mss <= 0:
            raise ConfigurationError("mss must be positive")
        if self.initial_cwnd < 1:
            raise ConfigurationError("initial_cwnd must be at least 1 segment")
        if self.initial_ssthresh <= 0:
            raise ConfigurationError("initial_ssthresh must be positive")
        if self.dupack_threshold < 1:
            raise ConfigurationError("dupack_threshold must be at least 1")
        if not (self.rto_min_us <= self.rto_initial_us <= self.rto_max_us):
            raise ConfigurationError(
                "rto bounds must satisfy rto_min <= rto_initial <= rto_max"
            )


class Sender:
    """One direction of a TCP connection: the side that sends the page."""

    def __init__(self, config: SenderConfig, variant: Variant):
        config.validate()
        self.config = config
        self.variant = variant
        self.mss = config.mss

        self.snd_una = 0
        self.snd_nxt = 0
        self.app_limit = 0  # end of queued application data
        self.cwnd = config.initial_cwnd * config.mss
        self.ssthresh = config.initial_ssthresh
        self.dupacks = 0
        self.in_fast_recovery = False
        self.recover = None  # high-water mark of the last loss response

        self.rto_current = config.rto_initial_us
        self.rto_deadline = None
        self.srtt = None
        self.rttvar = None

        self.ip_id_counter = 0
        self.diagnostics: list[str] = []

        self._max_sent = 0  # high water of seq+len ever emitted
        self._rtt_probe = None  # (start, end, sent_at); Karn-tracked segment

    # -- plumbing -------------------------------------------------------

    def next_ip_id(self) -> int:
        self.ip_id_counter += 1
        return self.ip_id_counter

    @property
    def flight(self) -> int:
        return self.snd_nxt - self.snd_una

    def effective_window(self) -> int:
        if self.in_fast_recovery and self.variant in _RECOVERY_VARIANTS:
            return self.cwnd + self.dupacks * self.mss
        return self.cwnd

    def _emit(self, seq: int, length: int, now: int) -> Segment:
        # Karn bookkeeping: a re-emission poisons any timed segment it
        # overlaps; otherwise start timing the first fresh segment in flight.
        if seq < self._max_sent:
            if self._rtt_probe is not None:
                start, end, _ = self._rtt_probe
                if seq < end and start < seq + length:
                    self._rtt_probe = None
        elif self._rtt_probe is None:
            self._rtt_probe = (seq, seq + length, now)
        self._max_sent = max(self._max_sent, seq + length)
        return Segment(
            src_role=SERVER,
            seq=seq,
            len=length,
            ack=0,
            flags=Flag.ACK,
            ip_id=self.next_ip_id(),
            sent_at=now,
        )

    # -- operations -----------------------------------------------------

    def enqueue_app_data(self, nbytes: int) -> None:
        if nbytes < 0:
            raise ValueError("cannot enqueue a negative byte count")
        self.app_limit += nbytes

    def pump_transmissions(self, now: int) -> list[Segment]:
        """Send whatever the window and the application queue allow."""
        out = []
        limit = min(self.app_limit, self.snd_una + self.effective_window())
        while self.snd_nxt < limit:
            length = min(self.mss, limit - self.snd_nxt)
            out.append(self._emit(self.snd_nxt, length, now))
            self.snd_nxt += length
        if self.rto_deadline is None and self.snd_nxt > self.snd_una:
            self.rto_deadline = now + self.rto_current
        return out

    def on_ack(self, ack: int, now: int) -> list[Segment]:
        if ack > self.app_limit:
            raise ProtocolError(f"ack {ack} beyond queued data {self.app_limit}")
        if ack < self.snd_una:
            self.diagnostics.append(f"ack regression: {ack} < {self.snd_una}")
            return []

        out = []
        if ack > self.snd_una:
            self._take_rtt_sample(ack, now)
            bytes_acked = ack - self.snd_una
            self.snd_una = ack
            if self.snd_nxt < self.snd_una:
                # The peer acknowledged data we forgot about after a go-back.
                self.snd_nxt = self.snd_una
            self.dupacks = 0

            if self.in_fast_recovery and self.variant is Variant.NEWRENO:
                if ack >= self.recover:
                    self.in_fast_recovery = False
                    self.cwnd = self.ssthresh
                else:
                    # Partial ACK: repair the next hole, deflate by the amount
                    # acknowledged, stay in recovery.
                    out.append(self._retransmit_head(now))
                    self.cwnd = max(self.cwnd - bytes_acked, 0) + self.mss
            elif self.in_fast_recovery:
                self.in_fast_recovery = False
                self.cwnd = self.ssthresh
            else:
                self._grow_cwnd()

            self.rto_deadline = (
                now + self.rto_current if self.snd_nxt > self.snd_una else None
            )
            out += self.pump_transmissions(now)
        elif self.snd_nxt > self.snd_una:
            self.dupacks += 1
            if (
                self.dupacks == self.config.dupack_threshold
                and self._may_enter_loss_response()
            ):
                out += self._loss_response(now)
            out += self.pump_transmissions(now)
        return out

    def on_rto(self, now: int) -> list[Segment]:
        """Retransmission timer expiry: collapse to one segment and go back."""
        if self.rto_deadline is None:
            raise InternalError("on_rto called with no armed timer")
        self.ssthresh = max(self.flight // 2, 2 * self.mss)
        self.cwnd = self.mss
        self.in_fast_recovery = False
        self.dupacks = 0
        self.snd_nxt = self.snd_una
        out = []
        if self.snd_una < self.app_limit:
            out.append(self._retransmit_head(now))
            self.snd_nxt = self.snd_una + out[0].len
        self.rto_current = min(2 * self.rto_current, self.config.rto_max_us)
        self.rto_deadline = (
            now + self.rto_current if self.snd_nxt > self.snd_una else None
        )
        return out

    def update_rtt(self, sample_us: int) -> None:
        """Fold one round-trip sample into srtt/rttvar and recompute the RTO."""
        if sample_us <= 0:
            return
        if self.srtt is None:
            self.srtt = float(sample_us)
            self.rttvar = sample_us / 2.0
        else:
            self.rttvar = 0.75 * self.rttvar + 0.25 * abs(self.srtt - sample_us)
            self.srtt = 0.875 * self.srtt + 0.125 * sample_us
        candidate = int(self.srtt + 4.0 * self.rttvar)
        self.rto_current = min(
            max(candidate, self.config.rto_min_us), self.config.rto_max_us
        )

    # -- internals ------------------------------------------------------

    def _grow_cwnd(self) -> None:
        if self.cwnd < self.ssthresh:
            self.cwnd += self.mss  # slow start: one segment per new ACK
        else:
            self.cwnd += (self.mss * self.mss) // self.cwnd

    def _retransmit_head(self, now: int) -> Segment:
        length = min(self.mss, self.app_limit - self.snd_una)
        return self._emit(self.snd_una, length, now)

    def _may_enter_loss_response(self) -> bool:
        if self.variant is Variant.NO_FAST_RETRANSMIT:
            return False
        if self.variant is Variant.TAHOE:
            return True
        # Reno-family re-entry guard: a stale dupACK burst for data below the
        # previous recovery point must not trigger a second fast retransmit.
        if self.in_fast_recovery:
            return False
        return self.recover is None or self.snd_una >= self.recover

    def _loss_response(self, now: int) -> list[Segment]:
        self.ssthresh = max(self.flight // 2, 2 * self.mss)
        if self.variant is Variant.TAHOE:
            self.cwnd = self.mss
            seg = self._retransmit_head(now)
            self.snd_nxt = self.snd_una + seg.len
            self.dupacks = 0
            return [seg]
        if self.variant is Variant.RENO_PLUS:
            # Window left alone; the caller's pump re-sends forward from
            # snd_una inside the inflated window (go-back burst).
            self.in_fast_recovery = True
            self.recover = self.snd_nxt
            self.snd_nxt = self.snd_una
            return []
        seg = self._retransmit_head(now)
        self.cwnd = self.ssthresh + self.config.dupack_threshold * self.mss
        self.in_fast_recovery = True
        self.recover = self.snd_nxt
        return [seg]

    def _take_rtt_sample(self, ack: int, now: int) -> None:
        if self._rtt_probe is None:
            return
        _, end, sent_at = self._rtt_probe
        if ack >= end:
            self._rtt_probe = None
            self.update_rtt(now - sent_at)
