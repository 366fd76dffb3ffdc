"""The read-only bundle of external data sources detectors may consult."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

from .advisories import AdvisorySource, FixtureAdvisorySource, OsvAdvisorySource
from .pinning import LiveForge, OfflineFixture, ResolutionSource


@dataclass(frozen=True)
class Services:
    advisories: AdvisorySource | None = None
    pins: ResolutionSource | None = None
    online: bool = False

    @classmethod
    def offline(cls, advisory_fixture: str | Path | None = None,
                pin_fixture: str | Path | None = None) -> Services:
        adv = FixtureAdvisorySource.load(advisory_fixture) if advisory_fixture else FixtureAdvisorySource.bundled()
        pins = OfflineFixture.load(pin_fixture) if pin_fixture else OfflineFixture()
        return cls(adv, pins, online=False)

    @classmethod
    def live(cls, pin_cache: str | Path | None = None, forge_endpoint: str | None = None,
             osv_endpoint: str | None = None) -> Services:
        forge = LiveForge(cache_path=Path(pin_cache) if pin_cache else None)
        if forge_endpoint:
            forge.endpoint = forge_endpoint
        osv = OsvAdvisorySource(osv_endpoint) if osv_endpoint else OsvAdvisorySource()
        return cls(osv, forge, online=True)
