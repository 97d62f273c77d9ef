"""Live retrieval against the real NCBI E-utilities (network required).

Searches PubMed, prints the server's automatic-term-mapping echo and the
publications-per-year histogram. Set NCBI_API_KEY / NCBI_EMAIL for higher
rate limits and polite identification.
"""

from topicpages.pubmed import PubMedClient, publications_per_year
from topicpages.query import parse_query

client = PubMedClient()
result = client.search(parse_query("microplastic"), cap=200)

print(f"total matches: {result.total_count}")
print(f"ATM echo: {result.atm_translation}")
print(f"retrieved: {len(result.records)}")

hist = publications_per_year(result.records)
for year in sorted(hist.per_year):
    print(f"{year}: {'#' * hist.per_year[year]}")
if hist.unknown:
    print(f"(no year: {hist.unknown})")
