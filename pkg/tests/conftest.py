import pytest

# Oil-market news fixture: a source with grounded figures and a summary
# carrying one fabricated price.
OIL_SOURCE = ("The oil price collapse sent global markets reeling throughout "
              "2015. Brent crude oil was up 3% at $37.60 per barrel for the "
              "day but down 35% over the year.")
OIL_SUMMARY = ("Wall Street markets closed lower on the last trading day of "
               "2015 as oil prices languished at $28 a barrel for much of "
               "the year.")
OIL_SUMMARY_SHORT = ("Wall Street markets closed lower as oil prices "
                     "languished at $28 a barrel for much of the year.")

HOSTAGE_SOURCE = ("Kevin Patrick Dawes, 33, was abducted in 2012 as he "
                  "entered Syria. The Czech government, which represents US "
                  "diplomatic interests in Syria, helped secure his release.")
HOSTAGE_SUMMARY = ("A US contractor who was held hostage in Syria for more "
                   "than three years has been freed, the US State Department "
                   "says.")


@pytest.fixture
def oil_fixture():
    return OIL_SOURCE, OIL_SUMMARY, OIL_SUMMARY_SHORT


@pytest.fixture
def hostage_fixture():
    return HOSTAGE_SOURCE, HOSTAGE_SUMMARY
