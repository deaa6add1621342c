#pragma once

// Umbrella header for the genrank toolkit: BM25 first-stage retrieval,
// composable pipelines, LLM-based generative reranking and TREC-style
// evaluation.

#include "genrank/config.hpp"
#include "genrank/core.hpp"
#include "genrank/errors.hpp"
#include "genrank/eval.hpp"
#include "genrank/index.hpp"
#include "genrank/llm_client.hpp"
#include "genrank/oracle.hpp"
#include "genrank/pipeline.hpp"
#include "genrank/prompts.hpp"
#include "genrank/rerank.hpp"
#include "genrank/trec.hpp"
