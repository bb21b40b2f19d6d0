/* Route one question through a trained engine.
 *
 *   cc ask.c -I../include -L../../../target/release -lqasim_ffi -o ask
 *   ./ask q.d2v q.vocab a.d2v qa.jsonl net.sim "why is my bill so high"
 */
#include <stdio.h>

#include "qasim.h"

int main(int argc, char **argv) {
    if (argc != 7) {
        fprintf(stderr, "usage: %s QMODEL QVOCAB AMODEL QA SIMNET QUESTION\n", argv[0]);
        return 2;
    }
    QasimEngine *engine = NULL;
    QasimStatus st = qasim_engine_open(argv[1], argv[2], argv[3], argv[4], argv[5], &engine);
    if (st != QASIM_STATUS_OK) {
        fprintf(stderr, "open failed (%d): %s\n", (int)st, qasim_last_error());
        return 1;
    }
    QasimDecision d;
    st = qasim_engine_ask(engine, argv[6], 0.7, &d);
    if (st != QASIM_STATUS_OK) {
        fprintf(stderr, "ask failed (%d): %s\n", (int)st, qasim_last_error());
        qasim_engine_free(engine);
        return 1;
    }
    if (d.answered) {
        printf("ANSWER (%.3f): %s\n", d.confidence, qasim_engine_answer_text(engine, d.best_index));
    } else {
        printf("ESCALATE (%.3f)\n", d.confidence);
    }
    qasim_engine_free(engine);
    return 0;
}
