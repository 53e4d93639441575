import httpx
import pytest

from litscreen.doi import HttpDoiResolver, TableResolver, resolve_doi
from litscreen.errors import DoiError, DoiNotFoundError, TransportError
from litscreen.records import Corpus, merge_into_corpus

FIXTURE_META = {
    "10.1111/test.1": {
        "title": ["Immersive Graph Screening"],
        "abstract": "<jats:p>An abstract with markup.</jats:p>",
        "author": [{"given": "Ada", "family": "Lovelace"}],
        "issued": {"date-parts": [[2021, 3]]},
        "container-title": ["Journal of Examples"],
        "type": "journal-article",
    }
}


class TestResolveDoi:
    def test_invalid_doi_fails_before_any_network_call(self):
        calls = []

        class Recording:
            name = "rec"

            def fetch(self, doi):
                calls.append(doi)
                return {}

        with pytest.raises(DoiError):
            resolve_doi("abc", Recording())
        assert calls == []

    def test_mock_resolver_round_trip(self):
        record = resolve_doi("10.1111/TEST.1", TableResolver(FIXTURE_META))
        assert record.title == "Immersive Graph Screening"
        assert record.abstract == "An abstract with markup."
        assert record.authors == ["Ada Lovelace"]
        assert record.year == 2021
        assert record.venue == "Journal of Examples"
        assert record.doi == "10.1111/test.1"
        assert record.source == "table"
        assert record.entry_kind == "article"

    def test_unknown_doi(self):
        with pytest.raises(DoiNotFoundError):
            resolve_doi("10.9999/nope", TableResolver(FIXTURE_META))

    def test_duplicate_doi_flagged_on_merge(self):
        record = resolve_doi("10.1111/test.1", TableResolver(FIXTURE_META))
        corpus, _ = merge_into_corpus(Corpus(), [record])
        again = resolve_doi("10.1111/test.1", TableResolver(FIXTURE_META))
        merged, report = merge_into_corpus(corpus, [again])
        assert report.duplicates_removed == 1
        assert len(merged.papers) == 1


class TestHttpResolver:
    def _resolver(self, handler):
        transport = httpx.MockTransport(handler)
        return HttpDoiResolver("http://resolver.test/works", client=httpx.Client(transport=transport))

    def test_fetch_unwraps_crossref_message(self):
        def handler(request):
            assert request.url.path == "/works/10.1111/test.1"
            return httpx.Response(200, json={"message": FIXTURE_META["10.1111/test.1"]})

        record = resolve_doi("10.1111/test.1", self._resolver(handler))
        assert record.title == "Immersive Graph Screening"

    def test_404_is_not_found(self):
        resolver = self._resolver(lambda request: httpx.Response(404))
        with pytest.raises(DoiNotFoundError):
            resolver.fetch("10.1111/test.1")

    def test_timeout_is_retryable_transport_error(self):
        def handler(request):
            raise httpx.ConnectTimeout("slow")

        resolver = self._resolver(handler)
        with pytest.raises(TransportError) as exc:
            resolver.fetch("10.1111/test.1")
        assert exc.value.retryable
