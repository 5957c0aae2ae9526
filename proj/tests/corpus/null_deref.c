#include <stdio.h>

struct node {
    int value;
    struct node *next;
};

int main(void) {
    struct node *head = NULL;
    int count = 3;
    head->value = count;
    printf("%d\n", head->value);
    return 0;
}
