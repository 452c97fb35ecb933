#pragma once

#include "claim.hpp"
#include "config.hpp"
#include "embed_client.hpp"
#include "embedding.hpp"
#include "error.hpp"
#include "fewshot.hpp"
#include "ingest.hpp"
#include "labels.hpp"
#include "llm.hpp"
#include "log.hpp"
#include "mmr.hpp"
#include "pipeline.hpp"
#include "prompt.hpp"
#include "retrieve.hpp"
#include "utf8.hpp"
#include "vector_store.hpp"
#include "verdict.hpp"
